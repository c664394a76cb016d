"""Train an agent against the environment with periodic greedy-policy evaluations."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from lodac.agents import DDQNAgent, DDQNConfig, QLearningAgent, extract_greedy_policy
from lodac.env import OPTIMUM_FOUND, LeadingOnesEnv
from lodac.errors import InvalidArgumentError, TrainingDivergedError
from lodac.harness.config import ExperimentConfig
from lodac.harness.metrics import EvalRecord, OptimalStats, first_hit_step, hitting_ratio, is_hit, ruggedness
from lodac.policy import Policy, Portfolio, optimal_restricted_policy, policy_from_text, policy_to_text, runtime_moments
from lodac.simulator import RunStats, estimate_runtime

CHECKPOINT_STATE = "checkpoint.json"
CHECKPOINT_AGENT = "checkpoint_agent.npz"


def derived_seed(*key: int) -> int:
    """A 63-bit integer seed derived from a tuple of non-negative integers."""
    return int(np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0] >> np.uint64(1))


# stream tags keep evaluation seeds disjoint from training seeds
_EVAL, _FINAL_BEST, _FINAL_LAST, _OPTIMAL, _ENV, _AGENT = range(6)


@dataclass
class ExperimentLog:
    config: ExperimentConfig
    portfolio: Portfolio
    optimal: OptimalStats
    records: list = field(default_factory=list)
    steps: int = 0
    episodes: int = 0
    best_step: int | None = None
    best_policy: Policy | None = None
    final_policy: Policy | None = None
    best_eval: RunStats | None = None
    final_eval: RunStats | None = None
    optimal_eval: RunStats | None = None

    @property
    def best_record(self) -> EvalRecord | None:
        if not self.records:
            return None
        return min(self.records, key=lambda rec: rec.mean)  # min keeps the earliest of equal means

    def hitting_ratio(self, tau: float | None = None) -> float:
        return hitting_ratio(self, self.optimal, self.config.tau if tau is None else tau)

    def ruggedness(self) -> float:
        return ruggedness(self)

    def first_hit(self, tau: float | None = None) -> int | None:
        return first_hit_step(self, self.optimal, self.config.tau if tau is None else tau)

    def comparable_to_optimal(self, num_se: float = 3.0) -> bool | None:
        """Whether the best policy's final mean lies within ``num_se`` combined standard errors of the optimum's."""
        if self.best_eval is None or self.optimal_eval is None:
            return None
        se = math.hypot(self.best_eval.stderr, self.optimal_eval.stderr)
        return abs(self.best_eval.mean - self.optimal_eval.mean) <= num_se * se

    def summary(self) -> dict:
        def stats(rs):
            return None if rs is None else {"runs": rs.runs, "mean": rs.mean, "std": rs.std, "censored": rs.censored}

        out = {
            "portfolio": list(self.portfolio.radii),
            "steps": self.steps,
            "episodes": self.episodes,
            "evaluations": len(self.records),
            "optimal_expected_runtime": self.optimal.mean,
            "optimal_std": self.optimal.std,
            "tau": self.config.tau,
            "hitting_ratio": self.hitting_ratio(),
            "hitting_ratio_tau_0.0025": self.hitting_ratio(0.0025),
            "hitting_ratio_tau_0.25": self.hitting_ratio(0.25),
            "first_hit_step": self.first_hit(),
            "ruggedness": self.ruggedness() if len(self.records) >= 3 else None,
            "best_step": self.best_step,
            "best_policy": list(self.best_policy.to_table()) if self.best_policy else None,
            "final_policy": list(self.final_policy.to_table()) if self.final_policy else None,
            "best_eval": stats(self.best_eval),
            "final_eval": stats(self.final_eval),
            "optimal_eval": stats(self.optimal_eval),
            "best_within_3se": self.comparable_to_optimal(),
        }
        return out

    def write_records_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, delimiter=";")
            writer.writerow(["train_step", "mean", "std", "runs", "hit"])
            for rec in self.records:
                writer.writerow([rec.train_step, repr(rec.mean), repr(rec.std), rec.runs, int(rec.hit)])
        return path


def read_records_csv(path) -> list[EvalRecord]:
    with Path(path).open(newline="") as fh:
        return [
            EvalRecord(int(row["train_step"]), float(row["mean"]), float(row["std"]), int(row["runs"]), row["hit"] == "1")
            for row in csv.DictReader(fh, delimiter=";")
        ]


def make_agent(config: ExperimentConfig, k: int):
    seed = derived_seed(config.seed, _AGENT)
    try:
        if config.agent == "ddqn":
            return DDQNAgent(config.n, k, DDQNConfig(**config.agent_params), seed=seed)
        return QLearningAgent(config.n, k, seed=seed, **config.agent_params)
    except TypeError as exc:
        raise InvalidArgumentError(f"bad agent_params for {config.agent}: {exc}") from exc


def _learn(agent, s, a, r, s2, terminal) -> None:
    if isinstance(agent, DDQNAgent):
        agent.observe(s, a, r, s2, terminal)
        if agent.ready:
            agent.train_step()
    else:
        agent.update(s, a, r, s2, terminal)


def _truncation_terminal(agent) -> bool:
    if isinstance(agent, DDQNAgent):
        return agent.config.truncation_terminal
    return agent.truncation_terminal


class Trainer:
    """Runs one :class:`ExperimentConfig`; optionally writes results and checkpoints to ``out``."""

    def __init__(self, config: ExperimentConfig, out=None, jobs: int = 1):
        self.config = config
        self.out = Path(out) if out is not None else None
        self.portfolio = config.portfolio(jobs)
        self.spec = config.env_spec(self.portfolio)
        opt_policy = optimal_restricted_policy(self.portfolio)
        self.optimal_policy = opt_policy
        moments = runtime_moments(opt_policy)
        self.agent = make_agent(config, self.portfolio.k)
        self.env = LeadingOnesEnv(self.spec, seed=derived_seed(config.seed, _ENV))
        self.log = ExperimentLog(config, self.portfolio, OptimalStats(moments.expectation, moments.std))
        if config.empirical_std:
            self.log.optimal_eval = self._evaluate(opt_policy, config.final_runs, derived_seed(config.seed, _OPTIMAL))
            self.log.optimal = OptimalStats(moments.expectation, self.log.optimal_eval.std)
        self._best_agent = None

    # -- evaluation ------------------------------------------------------------

    def _evaluate(self, policy: Policy, runs: int, base_seed: int) -> RunStats:
        return estimate_runtime(
            policy, self.spec.instance, runs=runs, base_seed=base_seed,
            cutoff=self.spec.cutoff, backend=self.spec.backend,
        )

    def greedy_policy(self) -> Policy:
        return extract_greedy_policy(self.agent, self.spec)

    def _periodic_evaluation(self, step: int) -> EvalRecord:
        policy = self.greedy_policy()
        stats = self._evaluate(policy, self.config.eval_runs, derived_seed(self.config.seed, _EVAL, step))
        rec = EvalRecord(step, stats.mean, stats.std, stats.runs, is_hit(stats.mean, self.log.optimal, self.config.tau))
        best = self.log.best_record
        self.log.records.append(rec)
        if best is None or rec.mean < best.mean:
            self.log.best_step = step
            self.log.best_policy = policy
            if self.out is not None:
                self._save_agent(self.out / "best_agent.npz", include_buffer=False)
        return rec

    # -- checkpoints -------------------------------------------------------------

    def _save_agent(self, path, include_buffer=True):
        if isinstance(self.agent, DDQNAgent):
            self.agent.save(path, include_buffer=include_buffer)
        else:
            self.agent.save(path)

    def _load_agent(self, path):
        cls = DDQNAgent if self.config.agent == "ddqn" else QLearningAgent
        self.agent = cls.load(path)

    def save_checkpoint(self) -> Path:
        if self.out is None:
            raise InvalidArgumentError("checkpoints need an output directory")
        self._save_agent(self.out / CHECKPOINT_AGENT)
        state = {
            "config": self.config.to_dict(),
            "steps": self.log.steps,
            "episodes": self.log.episodes,
            "records": [[r.train_step, r.mean, r.std, r.runs, r.hit] for r in self.log.records],
            "best_step": self.log.best_step,
            "best_policy": policy_to_text(self.log.best_policy) if self.log.best_policy else None,
            "env": _jsonable(self.env.get_state()),
        }
        path = self.out / CHECKPOINT_STATE
        path.write_text(json.dumps(state))
        return path

    def load_checkpoint(self) -> None:
        state = json.loads((self.out / CHECKPOINT_STATE).read_text())
        if state["config"] != self.config.to_dict():
            raise InvalidArgumentError("checkpoint was written by a different configuration")
        self._load_agent(self.out / CHECKPOINT_AGENT)
        self.log.steps = state["steps"]
        self.log.episodes = state["episodes"]
        self.log.records = [EvalRecord(s, m, sd, r, bool(h)) for s, m, sd, r, h in state["records"]]
        self.log.best_step = state["best_step"]
        self.log.best_policy = policy_from_text(state["best_policy"]) if state["best_policy"] else None
        env_state = state["env"]
        if env_state["process"] is not None:
            for key in ("x", "perm"):
                if key in env_state["process"]:
                    env_state["process"][key] = np.asarray(env_state["process"][key], dtype=np.int64)
        self.env.set_state(env_state)

    # -- main loop -----------------------------------------------------------------

    def run(self, resume: bool = False) -> ExperimentLog:
        cfg, log, env, agent = self.config, self.log, self.env, self.agent
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            cfg.save(self.out / "config.json")
        if resume and self.out is not None and (self.out / CHECKPOINT_STATE).exists():
            self.load_checkpoint()
            agent = self.agent
        if not log.records:
            self._periodic_evaluation(0)
        truncation_terminal = _truncation_terminal(agent)
        step = log.steps
        try:
            while step < cfg.budget:
                if env.done:
                    env.reset()
                    log.episodes += 1
                    continue
                s = env.fitness
                a = agent.act(s)
                res = env.step(a)
                cause = res.info["terminal"]
                terminal = cause == OPTIMUM_FOUND or (truncation_terminal and cause is not None)
                _learn(agent, s, a, res.reward, env.fitness, terminal)
                step += 1
                log.steps = step
                if step % cfg.eval_every == 0:
                    self._periodic_evaluation(step)
                    if self.out is not None and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                        self.save_checkpoint()
        except TrainingDivergedError as exc:
            exc.checkpoint = self._divergence_checkpoint()
            raise
        self._finish()
        return log

    def _divergence_checkpoint(self):
        if self.out is not None:
            self._write_outputs()
            if (self.out / "best_agent.npz").exists():
                return self.out / "best_agent.npz"
        return self.log

    def _finish(self) -> None:
        cfg, log = self.config, self.log
        log.final_policy = self.greedy_policy()
        log.best_eval = self._evaluate(log.best_policy, cfg.final_runs, derived_seed(cfg.seed, _FINAL_BEST))
        log.final_eval = self._evaluate(log.final_policy, cfg.final_runs, derived_seed(cfg.seed, _FINAL_LAST))
        if log.optimal_eval is None:
            log.optimal_eval = self._evaluate(self.optimal_policy, cfg.final_runs, derived_seed(cfg.seed, _OPTIMAL))
        if self.out is not None:
            self._save_agent(self.out / "final_agent.npz", include_buffer=False)
            self._write_outputs()

    def _write_outputs(self) -> None:
        from lodac.harness.svg import line_chart

        log = self.log
        log.write_records_csv(self.out / "evaluations.csv")
        (self.out / "summary.json").write_text(json.dumps(log.summary(), indent=2) + "\n")
        for name, pol in (("best_policy.txt", log.best_policy), ("final_policy.txt", log.final_policy)):
            if pol is not None:
                (self.out / name).write_text(policy_to_text(pol))
        xs = [rec.train_step for rec in log.records]
        line_chart(
            self.out / "evaluations.svg",
            {"greedy policy (mean runtime)": (xs, [rec.mean for rec in log.records]),
             "optimal expectation": (xs, [log.optimal.mean] * len(xs))},
            x_label="training step", y_label="runtime", title=f"{self.config.agent}, n={self.config.n}, K={self.portfolio}",
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def train(config: ExperimentConfig, out=None, jobs: int = 1, resume: bool = False) -> ExperimentLog:
    """Run an experiment end to end; see :class:`Trainer`."""
    return Trainer(config, out, jobs).run(resume=resume)
