"""Tabular Q-learning over (fitness, portfolio index) pairs."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from lodac.errors import InvalidArgumentError


def q_select_action(values: np.ndarray, state: int, epsilon: float, rng, greedy: bool = False) -> int:
    """Epsilon-greedy choice; the greedy branch breaks ties toward the smallest index."""
    if not greedy and epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(values.shape[1]))
    return int(np.argmax(values[state]))


def q_update(values, state, action, reward, next_state, terminal, alpha, gamma):
    """One temporal-difference update, in place; returns ``values``."""
    target = reward if terminal else reward + gamma * values[next_state].max()
    values[state, action] += alpha * (target - values[state, action])
    return values


class QLearningAgent:
    """Q-table of shape ``(n + 1, k)`` indexed by raw fitness.

    The step size of a pair visited ``v`` times is
    ``max(alpha_min, alpha / v**alpha_decay)``; the default ``alpha_decay=1`` makes
    each entry a running average of its targets, ``alpha_decay=0`` keeps it constant.

    Defaults suit the radius-control task.  Every fitness level is a self-loop left
    with probability ``q``, and with ``gamma=1`` an entry forgets its initial value
    only like ``v**-q`` under averaging; ``gamma=0.9`` speeds this up to
    ``v**-(1 - 0.9 (1 - q))``.  Discounting does not move the optimum here because
    the landing distribution after an improvement is the same for every radius, so
    the best action at each level is the one with the largest improvement
    probability for any ``gamma``.  Exploration is uniform (``epsilon=1``); the
    greedy policy is read off the table.
    """

    def __init__(self, n, k, alpha=1.0, gamma=0.9, epsilon=1.0, alpha_decay=1.0, alpha_min=0.0,
                 initial_value=0.0, truncation_terminal=False, seed=None):
        if not 0.0 < alpha <= 1.0:
            raise InvalidArgumentError("alpha must be in (0, 1]")
        if not 0.0 < gamma <= 1.0:
            raise InvalidArgumentError("gamma must be in (0, 1]")
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidArgumentError("epsilon must be in [0, 1]")
        if alpha_decay < 0.0 or not 0.0 <= alpha_min <= alpha:
            raise InvalidArgumentError("need alpha_decay >= 0 and 0 <= alpha_min <= alpha")
        if not np.isfinite(initial_value):
            raise InvalidArgumentError("initial_value must be finite")
        self.n, self.k = n, k
        self.alpha, self.gamma, self.epsilon = alpha, gamma, epsilon
        self.alpha_decay, self.alpha_min = alpha_decay, alpha_min
        self.initial_value = float(initial_value)
        self.truncation_terminal = bool(truncation_terminal)
        self.values = np.full((n + 1, k), self.initial_value)
        self.values[n] = 0.0
        self.visits = np.zeros((n + 1, k), dtype=np.int64)
        self.rng = np.random.default_rng(seed)
        self.steps = 0

    def params(self) -> dict:
        return {
            "alpha": self.alpha, "gamma": self.gamma, "epsilon": self.epsilon,
            "alpha_decay": self.alpha_decay, "alpha_min": self.alpha_min,
            "initial_value": self.initial_value,
            "truncation_terminal": self.truncation_terminal,
        }

    def act(self, state: int, greedy: bool = False) -> int:
        return q_select_action(self.values, state, self.epsilon, self.rng, greedy)

    def step_size(self, state, action) -> float:
        v = self.visits[state, action]
        if self.alpha_decay == 0.0 or v == 0:
            return self.alpha
        return max(self.alpha_min, self.alpha / v**self.alpha_decay)

    def update(self, state, action, reward, next_state, terminal) -> None:
        self.visits[state, action] += 1
        q_update(self.values, state, action, reward, next_state, terminal,
                 self.step_size(state, action), self.gamma)
        self.steps += 1

    def greedy_actions(self, n: int) -> list[int]:
        return [int(np.argmax(self.values[s])) for s in range(n)]

    def train(self, env, steps: int) -> None:
        """Interact with ``env`` for ``steps`` environment steps (resets are not counted)."""
        taken = 0
        while taken < steps:
            if env.done:
                env.reset()
                continue
            taken += 1
            s = env.fitness
            a = self.act(s)
            res = env.step(a)
            cause = res.info["terminal"]
            terminal = cause == "optimum_found" or (self.truncation_terminal and cause is not None)
            self.update(s, a, res.reward, env.fitness, terminal)

    # -- persistence ----------------------------------------------------------------

    def save(self, path) -> Path:
        path = Path(path)
        meta = {"n": self.n, "k": self.k, "steps": self.steps, "params": self.params(),
                "rng": self.rng.bit_generator.state}
        with path.open("wb") as fh:
            np.savez(fh, meta=np.array(json.dumps(meta)), values=self.values, visits=self.visits)
        return path

    @classmethod
    def load(cls, path) -> "QLearningAgent":
        with np.load(Path(path), allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            agent = cls(meta["n"], meta["k"], **meta["params"])
            agent.values = data["values"].copy()
            agent.visits = data["visits"].copy()
        agent.steps = meta["steps"]
        agent.rng.bit_generator.state = meta["rng"]
        return agent
