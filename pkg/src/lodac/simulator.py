"""Monte-Carlo execution of the (1+1) RLS with an exact search radius.

Two backends share one interface: ``bitstring`` runs the algorithm on actual
bit strings of a (possibly generalized) LeadingOnes instance, ``surrogate``
only tracks the fitness and samples each step from the exact transition law.

Runtime is the number of loop iterations before the optimum is the current
solution, so an optimal initial sample costs 0.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lodac.core import Instance, q_matrix
from lodac.errors import InvalidArgumentError
from lodac.kernels import backend as _kernels
from lodac.policy import Policy

BACKENDS = ("bitstring", "surrogate")
OPTIMUM_FOUND = "optimum_found"
CUTOFF = "cutoff"
FULL_TRACE_MAX_N = 256


def make_bitgen(seed) -> np.random.PCG64:
    """A fresh bit generator; ``seed`` may be an int, a SeedSequence or a bit generator."""
    if isinstance(seed, np.random.BitGenerator):
        return seed
    if isinstance(seed, np.random.Generator):
        return seed.bit_generator
    return np.random.PCG64(seed)


def run_seed(base_seed: int, run_index: int) -> np.random.SeedSequence:
    """Counter-based per-run seed: independent of how runs are scheduled."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(run_index,))


@dataclass
class EpisodeTrace:
    """Per-step record of one run.  ``compressed`` traces keep improving steps only."""

    n: int
    initial_fitness: int
    fitness_before: np.ndarray
    action: np.ndarray
    fitness_after: np.ndarray
    terminal: str
    total_steps: int
    compressed: bool = False
    step_index: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.step_index is None:
            self.step_index = np.arange(len(self.fitness_before), dtype=np.int64)

    @property
    def reward(self) -> np.ndarray:
        return (self.fitness_after - self.fitness_before - 1).astype(np.float64)

    @property
    def final_fitness(self) -> int:
        return int(self.fitness_after[-1]) if len(self.fitness_after) else self.initial_fitness

    @property
    def total_reward(self) -> float:
        """Undiscounted return; also valid for compressed traces."""
        return float(self.final_fitness - self.initial_fitness - self.total_steps)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, delimiter=";")
            writer.writerow(["step", "fitness_before", "action", "fitness_after", "reward"])
            for row in zip(self.step_index, self.fitness_before, self.action, self.fitness_after, self.reward):
                writer.writerow([int(row[0]), int(row[1]), int(row[2]), int(row[3]), repr(float(row[4]))])
        return path


@dataclass(frozen=True)
class RunStats:
    runs: int
    mean: float
    std: float
    min: int
    max: int
    censored: int = 0  # runs stopped by the cutoff

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.runs)

    @classmethod
    def from_samples(cls, samples, censored: int = 0) -> "RunStats":
        arr = np.asarray(samples, dtype=np.float64)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return cls(int(arr.size), float(arr.mean()), std, int(arr.min()), int(arr.max()), censored)


def _instance_arrays(inst: Instance):
    sigma_inv = np.empty(inst.n, dtype=np.int64)
    sigma_inv[inst.sigma] = np.arange(inst.n)
    return np.ascontiguousarray(inst.z), np.ascontiguousarray(inst.sigma), sigma_inv


def _cutoff(cutoff) -> int:
    if cutoff is None:
        return -1
    if cutoff < 0:
        raise InvalidArgumentError("cutoff must be non-negative")
    return int(cutoff)


class BitstringRLS:
    """Mutable state of one RLS run on bit strings; the environment steps through it."""

    def __init__(self, inst: Instance, bitgen):
        self.inst = inst
        self.n = inst.n
        self._z, self._sigma, self._sigma_inv = _instance_arrays(inst)
        self._bg = bitgen
        self._perm = np.arange(self.n, dtype=np.int64)
        self.x = _kernels.rls_init(self.n, bitgen)
        self.fitness = int(_kernels.lo_general(self.x, self._z, self._sigma))

    def step(self, radius: int) -> int:
        if not 0 <= radius <= self.n:
            raise InvalidArgumentError(f"radius {radius} outside [0..{self.n}]")
        self.fitness = int(
            _kernels.rls_step(self.x, self.fitness, radius, self._z, self._sigma, self._sigma_inv, self._perm, self._bg)
        )
        return self.fitness

    def get_state(self) -> dict:
        return {"x": self.x.copy(), "perm": self._perm.copy(), "fitness": self.fitness, "bitgen": self._bg.state}

    def set_state(self, state: dict) -> None:
        self.x[...] = state["x"]
        self._perm[...] = state["perm"]
        self.fitness = int(state["fitness"])
        self._bg.state = state["bitgen"]


class SurrogateRLS:
    """Fitness-only chain with the exact transition law of the bit-string process."""

    def __init__(self, n: int, bitgen):
        self.n = n
        self._q = np.ascontiguousarray(q_matrix(n))
        self._bg = bitgen
        self.fitness = int(_kernels.surrogate_init(n, bitgen))

    def step(self, radius: int) -> int:
        if not 0 <= radius <= self.n:
            raise InvalidArgumentError(f"radius {radius} outside [0..{self.n}]")
        self.fitness = int(_kernels.surrogate_step(self.fitness, radius, self._q, self._bg))
        return self.fitness

    def get_state(self) -> dict:
        return {"fitness": self.fitness, "bitgen": self._bg.state}

    def set_state(self, state: dict) -> None:
        self.fitness = int(state["fitness"])
        self._bg.state = state["bitgen"]


def _trace(process, table, cutoff, compressed) -> EpisodeTrace:
    n = process.n
    init = f = process.fitness
    before, acts, after, idx = [], [], [], []
    steps = 0
    while f < n and (cutoff < 0 or steps < cutoff):
        r = int(table[f])
        g = process.step(r)
        if not compressed or g != f:
            before.append(f)
            acts.append(r)
            after.append(g)
            idx.append(steps)
        f = g
        steps += 1
    as_arr = lambda v: np.asarray(v, dtype=np.int64)
    return EpisodeTrace(
        n, init, as_arr(before), as_arr(acts), as_arr(after),
        OPTIMUM_FOUND if f == n else CUTOFF, steps, compressed, as_arr(idx),
    )


def _check_policy(p: Policy, n: int) -> np.ndarray:
    if p.n != n:
        raise InvalidArgumentError(f"policy is for n={p.n}, instance has n={n}")
    return p.radii_array()


def run_rls(p: Policy, inst: Instance | None = None, rng=None, cutoff: int | None = None,
            compressed: bool | None = None) -> EpisodeTrace:
    """One run of the RLS on bit strings, recording every step (or only improvements)."""
    inst = inst or Instance.canonical(p.n)
    table = _check_policy(p, inst.n)
    if compressed is None:
        compressed = inst.n >= FULL_TRACE_MAX_N
    return _trace(BitstringRLS(inst, make_bitgen(rng)), table, _cutoff(cutoff), compressed)


def run_surrogate(p: Policy, n: int | None = None, rng=None, cutoff: int | None = None,
                  compressed: bool | None = None) -> EpisodeTrace:
    """One run of the fitness-level surrogate."""
    n = n or p.n
    table = _check_policy(p, n)
    if compressed is None:
        compressed = n >= FULL_TRACE_MAX_N
    return _trace(SurrogateRLS(n, make_bitgen(rng)), table, _cutoff(cutoff), compressed)


def sample_runtimes(p: Policy, runs: int, base_seed: int = 0, inst: Instance | None = None,
                    cutoff: int | None = None, backend: str = "bitstring"):
    """Runtimes of ``runs`` independent episodes; returns ``(steps, reached)`` arrays."""
    if runs < 1:
        raise InvalidArgumentError("runs must be at least 1")
    if backend not in BACKENDS:
        raise InvalidArgumentError(f"unknown backend {backend!r}")
    n = inst.n if inst is not None else p.n
    table = _check_policy(p, n)
    cut = _cutoff(cutoff)
    steps = np.empty(runs, dtype=np.int64)
    reached = np.empty(runs, dtype=bool)
    if backend == "bitstring":
        z, sigma, sigma_inv = _instance_arrays(inst or Instance.canonical(n))
        episode = lambda bg: _kernels.rls_episode(table, z, sigma, sigma_inv, cut, bg)
    else:
        qmat = np.ascontiguousarray(q_matrix(n))
        episode = lambda bg: _kernels.surrogate_episode(table, qmat, cut, bg)
    for idx in range(runs):
        s, _, ok = episode(np.random.PCG64(run_seed(base_seed, idx)))
        steps[idx] = s
        reached[idx] = ok
    return steps, reached


def estimate_runtime(p: Policy, inst: Instance | None = None, runs: int = 2000, base_seed: int = 0,
                     cutoff: int | None = None, backend: str = "bitstring") -> RunStats:
    """Aggregate runtime statistics; runs stopped by ``cutoff`` count with the cutoff value."""
    steps, reached = sample_runtimes(p, runs, base_seed, inst, cutoff, backend)
    return RunStats.from_samples(steps, censored=int((~reached).sum()))
