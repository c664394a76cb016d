"""LeadingOnes fitness, the exact-radius mutation, and improvement probabilities.

Bit strings are one-dimensional ``numpy`` arrays of ``uint8`` (or anything
coercible to one).  Fitness values are plain ``int``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from lodac.errors import InvalidArgumentError, InvalidRadiusError

__all__ = [
    "Instance",
    "leading_ones",
    "leading_ones_general",
    "flip_radius",
    "improvement_probability",
    "prefers_larger",
    "optimal_radius_full",
    "q_matrix",
]


def _as_bits(x) -> np.ndarray:
    bits = np.asarray(x, dtype=np.uint8)
    if bits.ndim != 1 or bits.size == 0:
        raise InvalidArgumentError("bit string must be a non-empty 1-d sequence")
    if bits.max() > 1:
        raise InvalidArgumentError("bit string entries must be 0 or 1")
    return bits


@dataclass(frozen=True)
class Instance:
    """A generalized LeadingOnes instance: target ``z`` read in the order ``sigma``.

    ``sigma`` is 0-based: ``sigma[j]`` is the bit position checked j-th.
    """

    n: int
    z: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgumentError("dimension must be positive")
        z = _as_bits(self.z)
        sigma = np.asarray(self.sigma, dtype=np.int64)
        if z.size != self.n or sigma.shape != (self.n,):
            raise InvalidArgumentError("target and permutation must have length n")
        if not np.array_equal(np.sort(sigma), np.arange(self.n)):
            raise InvalidArgumentError("sigma is not a permutation of 0..n-1")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def canonical(cls, n: int) -> "Instance":
        return cls(n, np.ones(n, dtype=np.uint8), np.arange(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "Instance":
        return cls(n, rng.integers(0, 2, size=n, dtype=np.uint8), rng.permutation(n))

    @property
    def is_canonical(self) -> bool:
        return bool(self.z.all()) and bool(np.array_equal(self.sigma, np.arange(self.n)))


def leading_ones(x) -> int:
    """Length of the longest all-ones prefix of ``x``."""
    bits = _as_bits(x)
    zeros = np.flatnonzero(bits == 0)
    return int(zeros[0]) if zeros.size else int(bits.size)


def leading_ones_general(x, inst: Instance) -> int:
    """Prefix-agreement length of ``x`` with ``inst.z`` when read in order ``inst.sigma``."""
    bits = _as_bits(x)
    if bits.size != inst.n:
        raise InvalidArgumentError(f"bit string has length {bits.size}, instance has n={inst.n}")
    agree = bits[inst.sigma] == inst.z[inst.sigma]
    wrong = np.flatnonzero(~agree)
    return int(wrong[0]) if wrong.size else inst.n


def flip_radius(x, r: int, rng: np.random.Generator) -> np.ndarray:
    """Return a copy of ``x`` with exactly ``r`` uniformly chosen distinct bits inverted."""
    bits = _as_bits(x)
    n = bits.size
    if not 0 <= r <= n:
        raise InvalidRadiusError(f"radius {r} outside [0..{n}]")
    y = bits.copy()
    if r:
        y[rng.choice(n, size=r, replace=False)] ^= 1
    return y


def _check_range(name: str, value: int, lo: int, hi: int) -> None:
    if not lo <= value <= hi:
        raise InvalidArgumentError(f"{name}={value} outside [{lo}..{hi}]")


def _q(r: int, i: int, n: int) -> float:
    # C(n-i-1, r-1) / C(n, r): the integer quotient is correctly rounded, so equal
    # probabilities compare equal and distinct ones never swap order
    if r == 0 or r > n - i:
        return 0.0
    return math.comb(n - i - 1, r - 1) / math.comb(n, r)


def improvement_probability(r: int, i: int, n: int) -> float:
    """Probability that flipping exactly ``r`` of ``n`` bits strictly improves fitness ``i``.

    Equals ``C(n-i-1, r-1) / C(n, r)`` for ``r >= 1``: bit ``i+1`` must be
    flipped and none of the ``i`` leading ones.
    """
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    _check_range("r", r, 0, n)
    _check_range("i", i, 0, n - 1)
    return _q(r, i, n)


def prefers_larger(r: int, i: int, n: int) -> bool:
    """True iff ``q(r, i) <= q(r + 1, i)``, decided without evaluating ``q``."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    _check_range("r", r, 0, n - 1)
    _check_range("i", i, 0, n - 1)
    return i * (r + 1) <= n - r


def optimal_radius_full(i: int, n: int) -> int:
    """The radius maximizing the improvement probability at fitness ``i`` over ``[0..n]``."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    _check_range("i", i, 0, n - 1)
    return n // (i + 1)


@lru_cache(maxsize=32)
def _q_matrix_cached(n: int) -> np.ndarray:
    mat = np.array([[_q(r, i, n) for i in range(n)] for r in range(n + 1)], dtype=np.float64)
    mat.setflags(write=False)
    return mat


def q_matrix(n: int) -> np.ndarray:
    """Read-only ``(n+1, n)`` array with entry ``[r, i] = q(r, i)``."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    return _q_matrix_cached(n)
