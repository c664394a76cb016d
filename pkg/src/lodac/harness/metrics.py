"""Training-progress metrics computed from a sequence of periodic evaluations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lodac.errors import UndefinedMetricError

# Two readings of the hit threshold, in units of the optimal runtime's standard deviation.
TAU_LOOSE = 0.25
TAU_STRICT = 0.0025


@dataclass(frozen=True)
class EvalRecord:
    """One periodic evaluation of the frozen greedy policy."""

    train_step: int
    mean: float
    std: float
    runs: int
    hit: bool = False


@dataclass(frozen=True)
class OptimalStats:
    """Reference point for the hit rule: the optimal expectation and a spread estimate."""

    mean: float
    std: float

    def threshold(self, tau: float) -> float:
        return self.mean + tau * self.std


def _means(log) -> np.ndarray:
    records = getattr(log, "records", log)
    return np.array([rec.mean for rec in records], dtype=np.float64)


def is_hit(mean: float, optimal: OptimalStats, tau: float) -> bool:
    """One-sided rule: an evaluation hits when its mean is at most ``opt + tau * std``."""
    return bool(mean <= optimal.threshold(tau))


def hitting_ratio(log, optimal: OptimalStats, tau: float = TAU_STRICT) -> float:
    """Fraction of evaluations that hit the optimal expectation within ``tau`` standard deviations.

    ``log`` is an :class:`~lodac.harness.training.ExperimentLog` or any
    sequence of :class:`EvalRecord`.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    means = _means(log)
    if means.size == 0:
        raise UndefinedMetricError("hitting ratio of an empty evaluation log")
    return float(np.mean(means <= optimal.threshold(tau)))


def ruggedness(log) -> float:
    """Standard deviation of the differences between consecutive evaluation means."""
    means = _means(log)
    if means.size < 3:
        raise UndefinedMetricError(f"ruggedness needs at least 3 evaluations, got {means.size}")
    return float(np.std(np.diff(means)))


def first_hit_step(log, optimal: OptimalStats, tau: float) -> int | None:
    """Training step of the earliest hitting evaluation, or None."""
    records = getattr(log, "records", log)
    for rec in records:
        if rec.mean <= optimal.threshold(tau):
            return rec.train_step
    return None
