"""Portfolios, fitness-dependent policies, and their exact runtime moments.

A policy maps each fitness ``i in [0..n-1]`` to a radius of its portfolio.
It is stored either as an explicit table or as breaking points over the
portfolio sorted in descending order: with sentinels ``b_0 = -1`` and
``b_k = n - 1``, fitness values in ``[b_{m-1}+1 .. b_m]`` use the m-th
largest radius.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from lodac.core import _q, q_matrix
from lodac.errors import InvalidArgumentError, RepresentationError, UnsolvablePortfolioError

__all__ = [
    "Portfolio",
    "Policy",
    "RuntimeMoments",
    "breaking_points_linear",
    "breaking_points_bisect",
    "optimal_restricted_policy",
    "optimal_full_policy",
    "constant_policy",
    "policy_lookup",
    "expected_runtime",
    "runtime_variance",
    "runtime_moments",
    "policy_to_text",
    "policy_from_text",
]

# relative gap below which two improvement probabilities count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Portfolio:
    n: int
    radii: tuple[int, ...]

    def __post_init__(self):
        radii = tuple(int(r) for r in self.radii)
        if self.n < 1:
            raise InvalidArgumentError("dimension must be positive")
        if not radii:
            raise InvalidArgumentError("portfolio must not be empty")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise InvalidArgumentError(f"portfolio radii must be strictly increasing: {radii}")
        if radii[0] < 0 or radii[-1] > self.n:
            raise InvalidArgumentError(f"portfolio radii must lie in [0..{self.n}]: {radii}")
        object.__setattr__(self, "radii", radii)

    @classmethod
    def of(cls, n: int, radii) -> "Portfolio":
        """Build from any iterable of radii, sorting and de-duplicating."""
        return cls(n, tuple(sorted(set(int(r) for r in radii))))

    @classmethod
    def full(cls, n: int) -> "Portfolio":
        return cls(n, tuple(range(n + 1)))

    @property
    def solvable(self) -> bool:
        return 1 in self.radii

    @property
    def k(self) -> int:
        return len(self.radii)

    @property
    def descending(self) -> tuple[int, ...]:
        return self.radii[::-1]

    def index(self, radius: int) -> int:
        return self.radii.index(radius)

    def __len__(self):
        return len(self.radii)

    def __iter__(self):
        return iter(self.radii)

    def __str__(self):
        return " ".join(map(str, self.radii))


@dataclass(frozen=True)
class RuntimeMoments:
    expectation: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True, eq=False)
class Policy:
    """Fitness-dependent policy in table or breakpoint form (exactly one is set)."""

    portfolio: Portfolio
    table: tuple[int, ...] | None = None
    breakpoints: tuple[int, ...] | None = None
    _full: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = self.portfolio.n
        if (self.table is None) == (self.breakpoints is None):
            raise RepresentationError("give exactly one of table or breakpoints")
        if self.table is not None:
            table = tuple(int(r) for r in self.table)
            if len(table) != n:
                raise RepresentationError(f"table has length {len(table)}, expected {n}")
            allowed = set(self.portfolio.radii)
            bad = [r for r in table if r not in allowed]
            if bad:
                raise RepresentationError(f"table uses radii outside the portfolio: {sorted(set(bad))}")
            object.__setattr__(self, "table", table)
            object.__setattr__(self, "_full", ())
        else:
            bps = tuple(int(b) for b in self.breakpoints)
            if len(bps) != self.portfolio.k - 1:
                raise RepresentationError(
                    f"{self.portfolio.k}-radius portfolio needs {self.portfolio.k - 1} breakpoints"
                )
            full = bps + (n - 1,)
            if any(b < -1 or b > n - 1 for b in bps) or any(y < x for x, y in zip(full, full[1:])):
                raise RepresentationError(f"breakpoints must be non-decreasing in [-1..{n - 1}]: {bps}")
            object.__setattr__(self, "breakpoints", bps)
            object.__setattr__(self, "_full", full)

    @property
    def n(self) -> int:
        return self.portfolio.n

    def __call__(self, i: int) -> int:
        return policy_lookup(self, i)

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        return self.portfolio == other.portfolio and self.to_table() == other.to_table()

    def __hash__(self):
        return hash((self.portfolio, self.to_table()))

    @property
    def is_monotone(self) -> bool:
        t = self.to_table()
        return all(b <= a for a, b in zip(t, t[1:]))

    def to_table(self) -> tuple[int, ...]:
        if self.table is not None:
            return self.table
        desc = self.portfolio.descending
        out = []
        prev = -1
        for radius, b in zip(desc, self._full):
            out.extend([radius] * (b - prev))
            prev = b
        return tuple(out)

    def to_breakpoints(self) -> tuple[int, ...]:
        if self.breakpoints is not None:
            return self.breakpoints
        if not self.is_monotone:
            raise RepresentationError("only non-increasing tables have a breakpoint encoding")
        table = self.table
        # b_m = last fitness whose radius is >= the m-th largest radius
        return tuple(sum(1 for r in table if r >= radius) - 1 for radius in self.portfolio.descending[:-1])

    def as_table(self) -> "Policy":
        return self if self.table is not None else Policy(self.portfolio, table=self.to_table())

    def as_breakpoints(self) -> "Policy":
        return self if self.breakpoints is not None else Policy(self.portfolio, breakpoints=self.to_breakpoints())

    def radii_array(self) -> np.ndarray:
        return np.asarray(self.to_table(), dtype=np.int64)

    def improvement_probabilities(self) -> np.ndarray:
        qm = q_matrix(self.n)
        table = self.radii_array()
        return qm[table, np.arange(self.n)]


def policy_lookup(p: Policy, i: int) -> int:
    """Radius the policy uses at fitness ``i``."""
    if not 0 <= i <= p.n - 1:
        raise InvalidArgumentError(f"fitness {i} outside [0..{p.n - 1}]")
    if p.table is not None:
        return p.table[i]
    return p.portfolio.descending[bisect.bisect_left(p._full, i)]


def constant_policy(portfolio: Portfolio, radius: int) -> Policy:
    return Policy(portfolio, table=(radius,) * portfolio.n)


def _require_solvable(K: Portfolio) -> None:
    if not K.solvable:
        raise UnsolvablePortfolioError(f"portfolio {K.radii} does not contain radius 1")


def breaking_points_linear(K: Portfolio) -> tuple[int, ...]:
    """Breaking points by the plain left-to-right scan over fitness values.

    The scan stops at the first fitness where the larger radius is no better than
    the smaller one, so exact ties go to the smaller radius, as in
    :func:`optimal_restricted_policy`.
    """
    _require_solvable(K)
    n = K.n
    desc = K.descending
    c = 0
    out = []
    for big, small in zip(desc, desc[1:]):
        for j in range(1, n):
            if _q(big, j, n) <= _q(small, j, n):
                break
            c = j
        out.append(c)
    return tuple(out)


def breaking_points_bisect(K: Portfolio) -> tuple[int, ...]:
    """Same result as :func:`breaking_points_linear`, locating each switch by bisection.

    For ``big > small`` the ratio ``q(big, j) / q(small, j)`` is non-increasing in
    ``j`` while ``q(small, j) > 0``, i.e. for ``j <= n - small``, so the scan's
    break condition is monotone there.  The larger radius drops to zero first, so
    the scan always stops inside that range or not at all.
    """
    _require_solvable(K)
    n = K.n
    desc = K.descending
    c = 0
    out = []
    for big, small in zip(desc, desc[1:]):
        lo, hi = 1, min(n - small, n - 1) + 1  # first breaking j is searched in [lo, hi)
        while lo < hi:
            mid = (lo + hi) // 2
            if _q(big, mid, n) <= _q(small, mid, n):
                hi = mid
            else:
                lo = mid + 1
        first = lo
        if first > min(n - small, n - 1):
            c = n - 1
        elif first > 1:
            c = first - 1
        out.append(c)
    return tuple(out)


def _argmax_radius(candidates, i: int, n: int) -> int:
    best_r, best_q = None, -1.0
    for r in candidates:  # ascending, so ties keep the smaller radius
        qr = _q(r, i, n)
        if best_r is None or (qr > best_q and not math.isclose(qr, best_q, rel_tol=TIE_RTOL)):
            best_r, best_q = r, qr
    return best_r


def optimal_restricted_policy(K: Portfolio) -> Policy:
    """Per-fitness argmax of the improvement probability over ``K`` (ties to the smaller radius)."""
    _require_solvable(K)
    n = K.n
    radii = K.radii
    table = []
    for i in range(n):
        full = n // (i + 1)
        pos = bisect.bisect_left(radii, full)
        if pos < len(radii) and radii[pos] == full:
            table.append(full)
            continue
        # q is unimodal in r with mode n//(i+1): only the neighbours of the mode compete
        cands = [radii[j] for j in (pos - 1, pos) if 0 <= j < len(radii)]
        table.append(_argmax_radius(cands, i, n))
    return Policy(K, table=tuple(table))


def optimal_full_policy(n: int) -> Policy:
    return Policy(Portfolio.full(n), table=tuple(n // (i + 1) for i in range(n)))


def expected_runtime(p: Policy) -> float:
    """Exact expected number of iterations until the optimum is the current solution.

    Each fitness level is visited with probability 1/2 and, when visited, is
    left after a geometric number of trials with success probability ``q``.
    Returns ``inf`` if some level cannot be left.
    """
    n = p.n
    total = 0.0
    for i, r in enumerate(p.to_table()):
        q = _q(r, i, n)
        if q <= 0.0:
            return math.inf
        total += 1.0 / q
    return 0.5 * total


def runtime_variance(p: Policy) -> float:
    """Variance of the runtime, the sum over levels of ``(3 - 2q) / (4 q^2)``."""
    n = p.n
    total = 0.0
    for i, r in enumerate(p.to_table()):
        q = _q(r, i, n)
        if q <= 0.0:
            return math.inf
        total += (3.0 - 2.0 * q) / (4.0 * q * q)
    return total


def runtime_moments(p: Policy) -> RuntimeMoments:
    return RuntimeMoments(expected_runtime(p), runtime_variance(p))


def policy_to_text(p: Policy) -> str:
    lines = [f"n: {p.n}", "portfolio: " + ",".join(map(str, p.portfolio.radii))]
    if p.breakpoints is not None:
        lines.append("breakpoints: " + ",".join(map(str, p.breakpoints)))
    else:
        lines.append("table: " + ",".join(map(str, p.table)))
    return "\n".join(lines) + "\n"


def _ints(s: str) -> tuple[int, ...]:
    s = s.strip()
    return tuple(int(v) for v in s.split(",")) if s else ()


def policy_from_text(text: str) -> Policy:
    fields = {}
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise RepresentationError(f"malformed policy line: {line!r}")
        fields[key.strip()] = value
    try:
        n = int(fields["n"])
        K = Portfolio(n, _ints(fields["portfolio"]))
        if "breakpoints" in fields:
            return Policy(K, breakpoints=_ints(fields["breakpoints"]))
        if "table" in fields:
            return Policy(K, table=_ints(fields["table"]))
    except KeyError as exc:
        raise RepresentationError(f"policy text lacks field {exc}") from None
    except InvalidArgumentError:
        raise
    except ValueError as exc:
        raise RepresentationError(f"malformed number in policy text: {exc}") from None
    raise RepresentationError("policy text needs a breakpoints or table line")

