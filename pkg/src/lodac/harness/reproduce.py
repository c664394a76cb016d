"""Regenerate the reference tables and figures as CSV (canonical) plus SVG renderings.

The exact-math commands (``table1``, ``table2``, ``fig1``, ``fig4``) take no
random input; ``training`` runs seeded learning experiments.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lodac.harness.config import ExperimentConfig
from lodac.harness.svg import line_chart
from lodac.harness.training import train
from lodac.policy import Portfolio, expected_runtime, optimal_restricted_policy
from lodac.portfolio import (
    DEFAULT_SEARCH_CAP,
    DEFAULT_SWEEP_CAP,
    FAMILIES,
    cumulative_curve,
    family_defined,
    family_portfolio,
    search_optimal_portfolio,
    sweep_all_portfolios,
    write_sweep_csv,
)


def _write_csv(path: Path, header, rows) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, delimiter=";")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _out_dir(out) -> Path | None:
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


@dataclass(frozen=True)
class Table1Row:
    n: int
    k: int
    portfolio: Portfolio
    expected_runtime: float

    @property
    def normalized(self) -> float:
        return self.expected_runtime / (self.n * self.n)


def table1(ks=range(2, 7), ns=(50, 100), out=None, jobs: int = 1, cap: int = DEFAULT_SEARCH_CAP) -> list[Table1Row]:
    """Optimal portfolio of each size ``k`` and its optimal expected runtime, per ``n``."""
    rows = []
    for n in ns:
        for k in ks:
            K, moments = search_optimal_portfolio(k, n, jobs, cap)
            rows.append(Table1Row(n, k, K, moments.expectation))
    out = _out_dir(out)
    if out is not None:
        _write_csv(
            out / "table1.csv",
            ["n", "k", "portfolio", "expected_runtime", "normalized_runtime"],
            [[r.n, r.k, str(r.portfolio), repr(r.expected_runtime), repr(r.normalized)] for r in rows],
        )
        line_chart(
            out / "table1.svg",
            {f"n={n}": ([r.k for r in rows if r.n == n], [r.normalized for r in rows if r.n == n]) for n in ns},
            x_label="portfolio size k", y_label="expected runtime / n^2", title="optimal portfolios",
        )
    return rows


@dataclass(frozen=True)
class Table2Row:
    n: int
    k: int
    family: str
    portfolio: Portfolio
    breakpoints: tuple[int, ...]
    expected_runtime: float

    @property
    def relative(self) -> tuple[float, ...]:
        return tuple(b / self.n for b in self.breakpoints)


def table2(ns=(50, 100), ks=(3, 4), families=FAMILIES, out=None, jobs: int = 1) -> list[Table2Row]:
    """Breaking points of the optimal policy for each family portfolio."""
    rows = []
    for k in ks:
        for family in families:
            for n in ns:
                if not family_defined(family, k, n):
                    continue
                K = family_portfolio(family, k, n, jobs)
                pol = optimal_restricted_policy(K)
                rows.append(Table2Row(n, k, family, K, pol.to_breakpoints(), expected_runtime(pol)))
    out = _out_dir(out)
    if out is not None:
        _write_csv(
            out / "table2.csv",
            ["k", "family", "n", "portfolio", "breakpoints", "relative_breakpoints", "expected_runtime"],
            [
                [r.k, r.family, r.n, str(r.portfolio), ",".join(map(str, r.breakpoints)),
                 ",".join(f"{v:.2f}" for v in r.relative), repr(r.expected_runtime)]
                for r in rows
            ],
        )
    return rows


def fig1(n: int = 50, k: int = 3, out=None, cap: int = DEFAULT_SWEEP_CAP):
    """All size-k portfolios containing 1: sorted runtimes and their cumulative fraction."""
    records = sweep_all_portfolios(k, n, cap=cap)
    curve = cumulative_curve(records)
    out = _out_dir(out)
    if out is not None:
        write_sweep_csv(records, out / "fig1_sweep.csv")
        _write_csv(out / "fig1_cdf.csv", ["normalized_runtime", "cumulative_fraction"],
                   [[repr(x), repr(y)] for x, y in curve])
        line_chart(
            out / "fig1.svg",
            {f"k={k}, n={n}": ([x for x, _ in curve], [y for _, y in curve])},
            x_label="expected runtime of the optimal policy / n^2", y_label="cumulative fraction of portfolios",
            title="all portfolios containing radius 1", step=True,
        )
    return records, curve


def fig4(n: int = 50, ks=range(2, 9), families=FAMILIES, out=None, jobs: int = 1,
         cap: int = DEFAULT_SEARCH_CAP) -> dict:
    """Normalized optimal expected runtime per family and portfolio size; undefined cells are omitted."""
    table = {family: {} for family in families}
    for k in ks:
        for family in families:
            if not family_defined(family, k, n):
                continue
            K = family_portfolio(family, k, n, jobs, cap)
            table[family][k] = (K, expected_runtime(optimal_restricted_policy(K)) / (n * n))
    out = _out_dir(out)
    if out is not None:
        rows = [
            [k, family, str(K), repr(v)]
            for family in families
            for k, (K, v) in sorted(table[family].items())
        ]
        _write_csv(out / "fig4.csv", ["k", "family", "portfolio", "normalized_runtime"], rows)
        line_chart(
            out / "fig4.svg",
            {family: (sorted(cells), [cells[k][1] for k in sorted(cells)]) for family, cells in table.items()},
            x_label="portfolio size k", y_label="expected runtime / n^2", title=f"optimal policies, n={n}",
        )
    return table


def training(n: int = 50, family: str = "evenly_spread", ks=(3,), seeds=(0, 1, 2), budget: int | None = None,
             agent: str = "ddqn", agent_params: dict | None = None, out=None, jobs: int = 1, **overrides) -> list:
    """Train one agent per (k, seed); returns ``[(k, seed, ExperimentLog)]`` and writes per-run folders.

    Runs are independent; with ``jobs > 1`` they are spread over worker processes.
    """
    out = _out_dir(out)
    tasks = []
    for k in ks:
        for seed in seeds:
            cfg = ExperimentConfig(n=n, family=family, k=k, agent=agent, agent_params=dict(agent_params or {}),
                                   budget=budget, seed=seed, **overrides)
            run_dir = None if out is None else out / f"{family}_k{k}_seed{seed}"
            tasks.append((k, seed, cfg, run_dir))
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            logs = list(pool.map(_train_task, [(cfg, run_dir) for _, _, cfg, run_dir in tasks]))
    else:
        logs = [_train_task((cfg, run_dir)) for _, _, cfg, run_dir in tasks]
    results = [(k, seed, log) for (k, seed, _, _), log in zip(tasks, logs)]
    if out is not None:
        rows = []
        for k, seed, log in results:
            s = log.summary()
            rows.append([
                k, seed, str(log.portfolio), s["hitting_ratio_tau_0.25"], s["hitting_ratio_tau_0.0025"],
                s["ruggedness"], s["first_hit_step"], s["best_step"], s["best_eval"]["mean"],
                s["optimal_eval"]["mean"], s["optimal_expected_runtime"], int(bool(s["best_within_3se"])),
            ])
        _write_csv(
            out / "training.csv",
            ["k", "seed", "portfolio", "hitting_ratio_tau_0.25", "hitting_ratio_tau_0.0025", "ruggedness",
             "first_hit_step", "best_step", "best_mean", "optimal_empirical_mean", "optimal_expected_runtime",
             "best_within_3se"],
            rows,
        )
        by_k = sorted(set(ks))
        line_chart(
            out / "training_hitting_ratio.svg",
            {"tau=0.25": (by_k, [np.mean([lg.hitting_ratio(0.25) for kk, _, lg in results if kk == k]) for k in by_k]),
             "tau=0.0025": (by_k, [np.mean([lg.hitting_ratio(0.0025) for kk, _, lg in results if kk == k]) for k in by_k])},
            x_label="portfolio size k", y_label="hitting ratio (seed mean)", title=f"{agent}, {family}, n={n}",
        )
    return results


def _train_task(args):
    cfg, run_dir = args
    return train(cfg, out=run_dir)
