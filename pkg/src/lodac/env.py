"""Reset/step environment for learning radius-control policies.

The state is the current fitness, an action is an index into the portfolio,
and each step yields reward ``f(x_t) - f(x_{t-1}) - 1``.  Summed over an
episode the rewards telescope to ``(f_final - f_initial) - steps``, so
maximizing the return minimizes the (truncated) runtime.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from lodac.core import Instance
from lodac.errors import EpisodeFinishedError, InvalidActionError, InvalidArgumentError
from lodac.policy import Portfolio
from lodac.simulator import BACKENDS, CUTOFF, OPTIMUM_FOUND, BitstringRLS, SurrogateRLS


def default_cutoff(n: int) -> int:
    """``ceil(0.8 * n^2)`` in exact integer arithmetic."""
    return -(-4 * n * n // 5)


@dataclass(frozen=True)
class EnvSpec:
    n: int
    portfolio: Portfolio
    cutoff: int | None = None
    backend: str = "bitstring"
    normalize_obs: bool = False
    instance: Instance | None = None

    def __post_init__(self):
        if self.portfolio.n != self.n:
            raise InvalidArgumentError("portfolio dimension differs from the environment's")
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", default_cutoff(self.n))
        if self.cutoff < 1:
            raise InvalidArgumentError("cutoff must be at least 1")
        if self.backend not in BACKENDS:
            raise InvalidArgumentError(f"unknown backend {self.backend!r}")
        if self.instance is not None and self.instance.n != self.n:
            raise InvalidArgumentError("instance dimension differs from the environment's")

    @property
    def k(self) -> int:
        return self.portfolio.k


@dataclass
class StepResult:
    observation: Any
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


class LeadingOnesEnv:
    """One environment instance; not thread-safe (it owns mutable episode state)."""

    def __init__(self, spec: EnvSpec, seed=None):
        self.spec = spec
        self._seeds = np.random.SeedSequence(seed)
        self._process = None
        self.fitness = None
        self.initial_fitness = None
        self.steps = 0
        self.episode_return = 0.0
        self.done = True

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def num_actions(self) -> int:
        return self.spec.k

    def observe(self, fitness: int):
        return fitness / self.n if self.spec.normalize_obs else fitness

    def reset(self, seed=None):
        """Start an episode from a uniformly random solution and return the first observation.

        Without ``seed`` each episode draws from the next child of the seed
        sequence given at construction.
        """
        ss = np.random.SeedSequence(seed) if seed is not None else self._seeds.spawn(1)[0]
        self._process = self._make_process(np.random.PCG64(ss))
        self.fitness = self.initial_fitness = self._process.fitness
        self.steps = 0
        self.episode_return = 0.0
        self.done = self.fitness == self.n
        return self.observe(self.fitness)

    def _make_process(self, bg):
        if self.spec.backend == "bitstring":
            return BitstringRLS(self.spec.instance or Instance.canonical(self.n), bg)
        return SurrogateRLS(self.n, bg)

    def get_state(self) -> dict:
        """Snapshot from which :meth:`set_state` resumes the exact same random trajectory."""
        return {
            "entropy": self._seeds.entropy,
            "children": self._seeds.n_children_spawned,
            "process": None if self._process is None else self._process.get_state(),
            "fitness": self.fitness,
            "initial_fitness": self.initial_fitness,
            "steps": self.steps,
            "episode_return": self.episode_return,
            "done": self.done,
        }

    def set_state(self, state: dict) -> None:
        self._seeds = np.random.SeedSequence(state["entropy"], n_children_spawned=state["children"])
        if state["process"] is None:
            self._process = None
        else:
            self._process = self._make_process(np.random.PCG64())
            self._process.set_state(state["process"])
        self.fitness = state["fitness"]
        self.initial_fitness = state["initial_fitness"]
        self.steps = state["steps"]
        self.episode_return = state["episode_return"]
        self.done = state["done"]

    def step(self, action_index: int) -> StepResult:
        if self._process is None or self.done:
            raise EpisodeFinishedError("call reset() before stepping a finished episode")
        if not 0 <= action_index < self.spec.k:
            raise InvalidActionError(f"action {action_index} outside [0..{self.spec.k - 1}]")
        before = self.fitness
        self.fitness = self._process.step(self.spec.portfolio.radii[action_index])
        self.steps += 1
        reward = float(self.fitness - before - 1)
        self.episode_return += reward
        info = {"fitness": self.fitness, "radius": self.spec.portfolio.radii[action_index], "terminal": None}
        if self.fitness == self.n:
            info["terminal"] = OPTIMUM_FOUND
        elif self.steps >= self.spec.cutoff:
            info["terminal"] = CUTOFF
        self.done = info["terminal"] is not None
        return StepResult(self.observe(self.fitness), reward, self.done, info)


def episode_return_identity(env: LeadingOnesEnv) -> bool:
    """Check that the accumulated return of a finished episode telescopes exactly."""
    if not env.done:
        raise InvalidArgumentError("episode still running")
    return env.episode_return == (env.fitness - env.initial_fitness) - env.steps


def rollout(env: LeadingOnesEnv, policy_fn, seed=None):
    """Play one episode choosing actions with ``policy_fn(fitness)``; returns (steps, return, final fitness)."""
    env.reset(seed)
    while not env.done:
        env.step(policy_fn(env.fitness))
    return env.steps, env.episode_return, env.fitness
