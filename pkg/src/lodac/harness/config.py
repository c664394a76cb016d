"""Experiment configuration: JSON on disk, validated dataclass in memory."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from lodac.env import EnvSpec
from lodac.errors import InvalidArgumentError
from lodac.harness.metrics import TAU_LOOSE
from lodac.policy import Portfolio
from lodac.portfolio import FAMILIES, family_portfolio
from lodac.simulator import BACKENDS

AGENTS = ("ddqn", "tabular")


def default_budget(n: int) -> int:
    """Training steps: one million up to n = 50, 1.4 million beyond."""
    return 1_000_000 if n <= 50 else 1_400_000


@dataclass
class ExperimentConfig:
    """Everything needed to rerun one training experiment.

    The portfolio is either ``family`` + ``k`` or explicit ``radii``.
    ``budget=0`` is allowed and yields only the initial evaluation.
    """

    n: int
    family: str | None = None
    k: int | None = None
    radii: list[int] | None = None
    agent: str = "ddqn"
    agent_params: dict = field(default_factory=dict)
    budget: int | None = None
    eval_every: int = 2000
    eval_runs: int = 50
    final_runs: int = 2000
    seed: int = 0
    backend: str = "bitstring"
    cutoff: int | None = None
    tau: float = TAU_LOOSE
    # use an empirical std of the optimal policy for the hit rule instead of the exact one
    empirical_std: bool = False
    # write an agent checkpoint every this many steps (0: only at the end)
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.budget is None:
            self.budget = default_budget(self.n)
        if self.n < 1:
            raise InvalidArgumentError("n must be positive")
        if self.agent not in AGENTS:
            raise InvalidArgumentError(f"unknown agent {self.agent!r}; choose from {AGENTS}")
        if self.backend not in BACKENDS:
            raise InvalidArgumentError(f"unknown backend {self.backend!r}")
        if (self.radii is None) == (self.family is None):
            raise InvalidArgumentError("give exactly one of family (with k) or radii")
        if self.family is not None:
            if self.family not in FAMILIES:
                raise InvalidArgumentError(f"unknown family {self.family!r}")
            if self.k is None:
                raise InvalidArgumentError("a family needs k")
        else:
            self.radii = sorted(int(r) for r in self.radii)
        for name in ("eval_every", "eval_runs", "final_runs"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.budget < 0:
            raise InvalidArgumentError("budget must be non-negative")
        if 0 < self.budget < self.eval_every:
            raise InvalidArgumentError("a non-zero budget must cover at least one evaluation period")
        if self.tau < 0:
            raise InvalidArgumentError("tau must be non-negative")
        if self.checkpoint_every < 0:
            raise InvalidArgumentError("checkpoint_every must be non-negative")

    def portfolio(self, jobs: int = 1) -> Portfolio:
        if self.radii is not None:
            return Portfolio(self.n, tuple(self.radii))
        return family_portfolio(self.family, self.k, self.n, jobs)

    def env_spec(self, portfolio: Portfolio | None = None) -> EnvSpec:
        K = portfolio or self.portfolio()
        if not K.solvable:
            raise InvalidArgumentError(f"portfolio {K} lacks radius 1; training needs a solvable portfolio")
        return EnvSpec(self.n, K, cutoff=self.cutoff, backend=self.backend)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n")
        return path

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)
