"""Named portfolio families, brute-force optimal portfolios, and full sweeps."""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lodac.core import q_matrix
from lodac.errors import EnumerationTooLargeError, FamilyUndefinedError, InvalidArgumentError
from lodac.kernels import backend
from lodac.policy import Portfolio, RuntimeMoments, optimal_restricted_policy, runtime_moments

FAMILIES = ("powers_of_2", "initial_segment", "evenly_spread", "optimal")
GENERATED_FAMILIES = FAMILIES[:3]
DEFAULT_SWEEP_CAP = 2_000_000
DEFAULT_SEARCH_CAP = 200_000_000


@dataclass(frozen=True)
class SweepRecord:
    portfolio: Portfolio
    expected_runtime: float
    normalized: float


def powers_of_2_max_k(n: int) -> int:
    """Largest k for which all of 2^0..2^(k-1) fit into [1..n]."""
    return n.bit_length()


def make_portfolio(kind: str, k: int, n: int) -> Portfolio:
    """Generate a portfolio of one of the closed-form families.

    ``powers_of_2`` is ``{2^i : i < k}`` and needs ``2^(k-1) <= n``;
    ``initial_segment`` is ``[1..k]``; ``evenly_spread`` is
    ``{i * (n // k) + 1 : i < k}``.
    """
    if kind == "optimal":
        raise FamilyUndefinedError("the optimal family is searched, not generated; use search_optimal_portfolio")
    if kind not in GENERATED_FAMILIES:
        raise FamilyUndefinedError(f"unknown portfolio family {kind!r}")
    if n < 2 or not 2 <= k <= n:
        raise FamilyUndefinedError(f"family {kind} needs n >= 2 and k in [2..n], got k={k}, n={n}")
    if kind == "powers_of_2":
        if k > powers_of_2_max_k(n):
            raise FamilyUndefinedError(f"powers_of_2 is undefined for k={k} > {powers_of_2_max_k(n)} at n={n}")
        radii = [2**i for i in range(k)]
    elif kind == "initial_segment":
        radii = list(range(1, k + 1))
    else:
        step = n // k
        radii = [i * step + 1 for i in range(k)]
    return Portfolio(n, tuple(radii))


def family_defined(kind: str, k: int, n: int) -> bool:
    if kind == "optimal":
        return 2 <= k <= n
    try:
        make_portfolio(kind, k, n)
    except FamilyUndefinedError:
        return False
    return True


def _chunks(n: int, k: int, jobs: int) -> list[tuple[int, int]]:
    """Split the smallest free radius [2..n-k+2] into contiguous ranges of similar work."""
    firsts = list(range(2, n - k + 3))
    weights = [math.comb(n - c, k - 2) for c in firsts]
    total = sum(weights)
    jobs = max(1, min(jobs, len(firsts)))
    bounds, acc, target = [], 0, total / jobs
    start = firsts[0]
    for c, w in zip(firsts, weights):
        acc += w
        if acc >= target * (len(bounds) + 1) and len(bounds) < jobs - 1:
            bounds.append((start, c + 1))
            start = c + 1
    bounds.append((start, firsts[-1] + 1))
    return [b for b in bounds if b[0] < b[1]]


def _search_chunk(args):
    n, k, lo, hi = args
    qmat = np.ascontiguousarray(q_matrix(n))
    return backend.best_subset(qmat, k, lo, hi)


def search_optimal_portfolio(k: int, n: int, jobs: int = 1,
                             cap: int = DEFAULT_SEARCH_CAP) -> tuple[Portfolio, RuntimeMoments]:
    """Exhaustively find the size-k portfolio containing 1 with the smallest optimal expected runtime.

    Ties go to the lexicographically smallest portfolio, independent of ``jobs``.
    Refuses to enumerate more than ``cap`` candidates.
    """
    if n < 2 or not 2 <= k <= n:
        raise InvalidArgumentError(f"need 2 <= k <= n, got k={k}, n={n}")
    count = math.comb(n - 1, k - 1)
    if count > cap:
        raise EnumerationTooLargeError(
            f"{count} candidate portfolios exceed the cap of {cap}; raise the cap (and use --jobs) or lower k"
        )
    tasks = [(n, k, lo, hi) for lo, hi in _chunks(n, k, jobs)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_search_chunk, tasks))
    else:
        results = [_search_chunk(t) for t in tasks]
    best_val, best_combo = math.inf, None
    for val, combo in results:  # chunks are in lexicographic order
        if combo is not None and val < best_val:
            best_val, best_combo = val, combo
    K = Portfolio(n, (1,) + tuple(int(c) for c in best_combo))
    return K, runtime_moments(optimal_restricted_policy(K))


def family_portfolio(kind: str, k: int, n: int, jobs: int = 1, cap: int = DEFAULT_SEARCH_CAP) -> Portfolio:
    if kind == "optimal":
        return search_optimal_portfolio(k, n, jobs, cap)[0]
    return make_portfolio(kind, k, n)


def sweep_all_portfolios(
    k: int, n: int, require_radius_one: bool = True, cap: int = DEFAULT_SWEEP_CAP
) -> list[SweepRecord]:
    """Optimal-policy expected runtime of every size-k portfolio, sorted ascending.

    Candidates are k-subsets of [1..n]; with ``require_radius_one`` only those
    containing 1.  Portfolios without radius 1 have infinite expected runtime.
    """
    if n < 2 or not 2 <= k <= n:
        raise InvalidArgumentError(f"need 2 <= k <= n, got k={k}, n={n}")
    count = math.comb(n - 1, k - 1) if require_radius_one else math.comb(n, k)
    if count > cap:
        raise EnumerationTooLargeError(
            f"{count} portfolios exceed the cap of {cap}; raise the cap or lower k"
        )
    qmat = np.ascontiguousarray(q_matrix(n))
    values = backend.subset_runtimes(qmat, k)
    n2 = float(n * n)
    records = [
        SweepRecord(Portfolio(n, (1,) + combo), float(v), float(v) / n2)
        for combo, v in zip(itertools.combinations(range(2, n + 1), k - 1), values)
    ]
    if not require_radius_one:
        records += [
            SweepRecord(Portfolio(n, combo), math.inf, math.inf)
            for combo in itertools.combinations(range(2, n + 1), k)
        ]
    records.sort(key=lambda rec: rec.expected_runtime)
    return records


def cumulative_curve(records: list[SweepRecord]) -> list[tuple[float, float]]:
    """Points (normalized runtime, fraction of portfolios at most that runtime)."""
    total = len(records)
    values = sorted(rec.normalized for rec in records)
    return [(v, (idx + 1) / total) for idx, v in enumerate(values)]


def write_sweep_csv(records, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=";")
        writer.writerow(["portfolio", "expected_runtime", "normalized"])
        for rec in records:
            writer.writerow([str(rec.portfolio), repr(rec.expected_runtime), repr(rec.normalized)])
    return path


def read_sweep_csv(path, n: int) -> list[SweepRecord]:
    """Load records written by :func:`write_sweep_csv`; the file does not store ``n``."""
    with Path(path).open(newline="") as fh:
        return [
            SweepRecord(
                Portfolio(n, tuple(int(v) for v in row["portfolio"].split())),
                float(row["expected_runtime"]),
                float(row["normalized"]),
            )
            for row in csv.DictReader(fh, delimiter=";")
        ]
