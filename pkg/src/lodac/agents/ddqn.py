"""Double DQN with a numpy MLP, uniform replay, and a periodically synced target network."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from lodac.agents.mlp import MLP, Adam
from lodac.agents.replay import ReplayBuffer
from lodac.errors import TrainingDivergedError


@dataclass
class DDQNConfig:
    hidden: tuple = (50, 50)
    batch_size: int = 2048
    epsilon: float = 0.2
    gamma: float = 0.9998
    lr: float = 1e-3
    buffer_capacity: int = 100_000
    target_sync: int = 500
    # a train step per environment step once the buffer holds this many transitions (default: batch size)
    learning_starts: int | None = None
    # treat the episode cutoff as a terminal state when bootstrapping
    truncation_terminal: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.learning_starts is None:
            self.learning_starts = self.batch_size


class DDQNAgent:
    """Acts on raw fitness in ``[0..n]``; the network sees ``fitness / n``.

    Because the state space is the finite grid of fitness levels, a train step
    evaluates both networks once on the whole grid and routes the per-sample
    TD-errors back through it.  This is the batch gradient of the mean squared
    TD-error, computed with ``n + 1`` network rows instead of ``batch_size``.
    """

    def __init__(self, n: int, k: int, config: DDQNConfig | None = None, seed=None):
        self.n, self.k = n, k
        self.config = config or DDQNConfig()
        cfg = self.config
        self.rng = np.random.default_rng(seed)
        self.online = MLP((1, *cfg.hidden, k), self.rng, dtype=cfg.dtype)
        self.target = self.online.copy()
        self.optimizer = Adam(cfg.lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.train_steps = 0
        self._grid = self._inputs(np.arange(n + 1))
        self._target_grid = None

    def _inputs(self, fitness) -> np.ndarray:
        return (np.asarray(fitness, dtype=np.float64).reshape(-1, 1) / self.n).astype(self.online.dtype)

    def q_values(self, fitness) -> np.ndarray:
        return self.online(self._inputs(fitness))

    def act(self, fitness: int, greedy: bool = False) -> int:
        if not greedy and self.rng.random() < self.config.epsilon:
            return int(self.rng.integers(self.k))
        return int(np.argmax(self.q_values(fitness)[0]))

    def greedy_actions(self, n: int | None = None) -> list[int]:
        n = self.n if n is None else n
        return [int(a) for a in np.argmax(self.q_values(np.arange(n)), axis=1)]

    def observe(self, fitness, action, reward, next_fitness, done) -> None:
        self.buffer.add(fitness, action, reward, next_fitness, done)

    @property
    def ready(self) -> bool:
        return len(self.buffer) >= max(self.config.learning_starts, self.config.batch_size)

    def _target_values(self) -> np.ndarray:
        # the target network only changes at syncs, so its grid outputs are cached
        if self._target_grid is None:
            self._target_grid = self.target(self._grid)
        return self._target_grid

    def _next_values(self, q_grid) -> np.ndarray:
        a_star = np.argmax(q_grid, axis=1)
        return self._target_values()[np.arange(self.n + 1), a_star]

    def td_targets(self, rewards, next_states, dones) -> np.ndarray:
        """``r + gamma * Q_target(s', argmax_a Q_online(s', a))``, without bootstrap on terminal steps."""
        s2 = np.asarray(next_states, dtype=np.int64).ravel()
        next_val = self._next_values(self.online(self._grid))[s2]
        return self._combine(rewards, next_val, dones)

    def _combine(self, rewards, next_val, dones) -> np.ndarray:
        dt = self.online.dtype
        return np.asarray(rewards, dtype=dt) + dt.type(self.config.gamma) * np.where(dones, 0, next_val).astype(dt)

    def train_step(self, batch=None) -> float:
        """One optimizer step on the squared double-Q TD error of a batch; returns the batch loss.

        ``batch`` is ``(states, actions, rewards, next_states, dones)`` with
        integer fitness states; by default it is sampled from the buffer.
        """
        cfg = self.config
        if batch is None:
            batch = self.buffer.sample(cfg.batch_size, self.rng)
        s, a, r, s2, done = batch
        s = np.asarray(s, dtype=np.int64).ravel()
        s2 = np.asarray(s2, dtype=np.int64).ravel()
        a = np.asarray(a, dtype=np.int64)
        q_grid, acts = self.online.forward(self._grid, keep=True)
        y = self._combine(r, self._next_values(q_grid)[s2], done)
        diff = q_grid[s, a] - y
        loss = float(np.mean(diff.astype(np.float64) ** 2))
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss at train step {self.train_steps}")
        cells = s * self.k + a
        grad_out = np.bincount(cells, weights=diff, minlength=q_grid.size).reshape(q_grid.shape)
        grad_out = (grad_out * (2.0 / len(a))).astype(q_grid.dtype)
        grads = self.online.backward(acts, grad_out)
        self.optimizer.step([self.online.flat], [MLP.flatten(grads)])
        self.train_steps += 1
        if self.train_steps % cfg.target_sync == 0:
            self.sync_target()
        return loss

    def sync_target(self) -> None:
        self.target = self.online.copy()
        self._target_grid = None

    # -- checkpoints ---------------------------------------------------------

    def save(self, path, include_buffer: bool = True) -> Path:
        path = Path(path)
        meta = {
            "format": "lodac-ddqn/1",
            "n": self.n,
            "k": self.k,
            "config": asdict(self.config),
            "train_steps": self.train_steps,
            "optimizer": self.optimizer.state(),
            "rng": self.rng.bit_generator.state,
            "buffer": {"size": self.buffer.size, "next": self.buffer._next} if include_buffer else None,
        }
        arrays = {"meta": np.array(json.dumps(meta))}
        for name, net in (("online", self.online), ("target", self.target)):
            for idx, p in enumerate(net.params):
                arrays[f"{name}_{idx}"] = p
        if self.optimizer.m is not None:
            for idx, (m, v) in enumerate(zip(self.optimizer.m, self.optimizer.v)):
                arrays[f"adam_m_{idx}"] = m
                arrays[f"adam_v_{idx}"] = v
        if include_buffer:
            for name in ("states", "actions", "rewards", "next_states", "dones"):
                arrays[f"buffer_{name}"] = getattr(self.buffer, name)
        with path.open("wb") as fh:
            np.savez(fh, **arrays)
        return path

    @classmethod
    def load(cls, path) -> "DDQNAgent":
        with np.load(Path(path), allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            agent = cls(meta["n"], meta["k"], DDQNConfig(**meta["config"]))
            n_params = 2 * (len(agent.config.hidden) + 1)
            agent.online.set_params([data[f"online_{i}"] for i in range(n_params)])
            agent.target.set_params([data[f"target_{i}"] for i in range(n_params)])
            agent._target_grid = None
            opt = meta["optimizer"]
            agent.optimizer = Adam(opt["lr"], opt["beta1"], opt["beta2"], opt["eps"])
            agent.optimizer.t = opt["t"]
            n_moments = sum(1 for key in data.files if key.startswith("adam_m_"))
            if n_moments:
                agent.optimizer.m = [data[f"adam_m_{i}"].copy() for i in range(n_moments)]
                agent.optimizer.v = [data[f"adam_v_{i}"].copy() for i in range(n_moments)]
            agent.train_steps = meta["train_steps"]
            agent.rng.bit_generator.state = meta["rng"]
            if meta["buffer"] is not None:
                for name in ("states", "actions", "rewards", "next_states", "dones"):
                    setattr(agent.buffer, name, data[f"buffer_{name}"].copy())
                agent.buffer.size = meta["buffer"]["size"]
                agent.buffer._next = meta["buffer"]["next"]
        return agent
