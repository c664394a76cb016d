"""Command-line entry point: ``lodac <command> [options]``.

Exit codes: 0 success, 2 invalid argument, 3 enumeration too large,
4 training diverged, 1 any other lodac error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from lodac.errors import InvalidArgumentError, LodacError
from lodac.policy import (
    Policy,
    Portfolio,
    constant_policy,
    optimal_restricted_policy,
    policy_from_text,
    policy_to_text,
    runtime_moments,
)
from lodac.portfolio import (
    DEFAULT_SEARCH_CAP,
    DEFAULT_SWEEP_CAP,
    FAMILIES,
    family_portfolio,
    search_optimal_portfolio,
    sweep_all_portfolios,
    write_sweep_csv,
)
from lodac.simulator import BACKENDS, run_rls, run_surrogate, sample_runtimes, RunStats


def int_list(text: str) -> list[int]:
    """Parse ``"2-6"``, ``"2,3,5"`` or ``"1 2 6"`` into a list of integers."""
    out = []
    for part in text.replace(",", " ").split():
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no integers in {text!r}")
    return out


def _common(parser: argparse.ArgumentParser, *flags: str) -> None:
    specs = {
        "n": dict(type=int, help="problem dimension"),
        "k": dict(type=int, help="portfolio size (with --family)"),
        "portfolio": dict(type=int_list, help="explicit radii, e.g. 1,2,6"),
        "family": dict(choices=FAMILIES, help="portfolio family"),
        "seed": dict(type=int, default=0, help="base random seed (default 0)"),
        "runs": dict(type=int, help="number of simulated runs"),
        "budget": dict(type=int, help="training steps"),
        "out": dict(type=Path, help="output directory"),
        "jobs": dict(type=int, default=1, help="worker processes (default 1)"),
    }
    for flag in flags:
        parser.add_argument(f"--{flag}", **specs[flag])


def _portfolio(args, required=True) -> Portfolio | None:
    if args.portfolio is not None and args.family is not None:
        raise InvalidArgumentError("give either --portfolio or --family/--k, not both")
    if args.n is None:
        raise InvalidArgumentError("--n is required")
    if args.portfolio is not None:
        return Portfolio.of(args.n, args.portfolio)
    if args.family is not None:
        if args.k is None:
            raise InvalidArgumentError("--family needs --k")
        return family_portfolio(args.family, args.k, args.n, getattr(args, "jobs", 1))
    if required:
        raise InvalidArgumentError("a portfolio is required: --portfolio R1,R2,... or --family F --k K")
    return None


def _policy(args) -> Policy:
    if getattr(args, "policy", None) is not None:
        p = policy_from_text(Path(args.policy).read_text())
        if args.n is not None and p.n != args.n:
            raise InvalidArgumentError(f"policy file is for n={p.n}, not --n {args.n}")
        return p
    K = _portfolio(args)
    if getattr(args, "constant", None) is not None:
        return constant_policy(K, args.constant)
    if getattr(args, "breakpoints", None) is not None:
        return Policy(K, breakpoints=tuple(args.breakpoints))
    if getattr(args, "table", None) is not None:
        return Policy(K, table=tuple(args.table))
    return optimal_restricted_policy(K)


def _emit(args, name: str, text: str) -> None:
    print(text, end="" if text.endswith("\n") else "\n")
    if getattr(args, "out", None) is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / name).write_text(text if text.endswith("\n") else text + "\n")


def _stats_text(label: str, st: RunStats) -> str:
    return f"{label};{st.runs};{st.mean!r};{st.std!r};{st.stderr!r};{st.min};{st.max};{st.censored}\n"


# -- commands ---------------------------------------------------------------------


def cmd_eval_policy(args) -> int:
    p = _policy(args)
    m = runtime_moments(p)
    n2 = p.n * p.n
    text = "expected_runtime;variance;std;normalized_runtime\n"
    text += f"{m.expectation!r};{m.variance!r};{m.std!r};{m.expectation / n2!r}\n"
    if args.runs:
        steps, reached = sample_runtimes(p, args.runs, args.seed, cutoff=args.cutoff, backend=args.backend)
        st = RunStats.from_samples(steps, censored=int((~reached).sum()))
        text += "\nsample;runs;mean;std;stderr;min;max;censored\n" + _stats_text(args.backend, st)
    _emit(args, "eval_policy.csv", text)
    return 0


def cmd_optimal_policy(args) -> int:
    K = _portfolio(args)
    p = optimal_restricted_policy(K)
    m = runtime_moments(p)
    text = policy_to_text(p.as_breakpoints())
    text += f"expected_runtime: {m.expectation!r}\nnormalized_runtime: {m.expectation / (K.n * K.n)!r}\n"
    _emit(args, "optimal_policy.txt", text)
    return 0


def cmd_optimal_portfolio(args) -> int:
    if args.n is None or args.k is None:
        raise InvalidArgumentError("--n and --k are required")
    K, m = search_optimal_portfolio(args.k, args.n, args.jobs, args.cap)
    text = "n;k;portfolio;expected_runtime;normalized_runtime\n"
    text += f"{args.n};{args.k};{K};{m.expectation!r};{m.expectation / (args.n * args.n)!r}\n"
    _emit(args, "optimal_portfolio.csv", text)
    return 0


def cmd_sweep_portfolios(args) -> int:
    if args.n is None or args.k is None:
        raise InvalidArgumentError("--n and --k are required")
    records = sweep_all_portfolios(args.k, args.n, require_radius_one=not args.all, cap=args.cap)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = write_sweep_csv(records, args.out / "sweep.csv")
        print(f"{len(records)} portfolios written to {path}")
    else:
        print("portfolio;expected_runtime;normalized")
        for rec in records:
            print(f"{rec.portfolio};{rec.expected_runtime!r};{rec.normalized!r}")
    return 0


def cmd_simulate(args) -> int:
    p = _policy(args)
    runs = args.runs or 1
    if args.trace is not None:
        run = run_rls if args.backend == "bitstring" else run_surrogate
        trace = run(p, rng=args.seed, cutoff=args.cutoff)
        trace.to_csv(args.trace)
    steps, reached = sample_runtimes(p, runs, args.seed, cutoff=args.cutoff, backend=args.backend)
    st = RunStats.from_samples(steps, censored=int((~reached).sum()))
    text = "backend;runs;mean;std;stderr;min;max;censored\n" + _stats_text(args.backend, st)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with (args.out / "runtimes.csv").open("w") as fh:
            fh.write("run;steps;reached\n")
            for idx, (s, ok) in enumerate(zip(steps, reached)):
                fh.write(f"{idx};{int(s)};{int(ok)}\n")
    _emit(args, "simulate.csv", text)
    return 0


def _train_config(args):
    from lodac.harness.config import ExperimentConfig

    if args.config is not None:
        cfg = ExperimentConfig.load(args.config)
        overrides = {"seed": args.seed if args.seed_given else None, "budget": args.budget}
        data = cfg.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_dict(data)
    if args.n is None:
        raise InvalidArgumentError("--n (or --config) is required")
    params = json.loads(args.agent_params) if args.agent_params else {}
    return ExperimentConfig(
        n=args.n, family=args.family, k=args.k, radii=args.portfolio, agent=args.agent, agent_params=params,
        budget=args.budget, seed=args.seed, backend=args.backend,
        eval_every=args.eval_every, eval_runs=args.eval_runs, final_runs=args.final_runs, tau=args.tau,
        checkpoint_every=args.checkpoint_every,
    )


def cmd_train(args) -> int:
    from lodac.harness.training import train

    cfg = _train_config(args)
    log = train(cfg, out=args.out, jobs=args.jobs, resume=args.resume)
    print(json.dumps(log.summary(), indent=2))
    return 0


def cmd_metrics(args) -> int:
    from lodac.harness.config import ExperimentConfig
    from lodac.harness.metrics import OptimalStats, TAU_LOOSE, TAU_STRICT, hitting_ratio, ruggedness
    from lodac.harness.training import read_records_csv

    run_dir = Path(args.log)
    records = read_records_csv(run_dir / "evaluations.csv" if run_dir.is_dir() else run_dir)
    if args.n is None and run_dir.is_dir() and (run_dir / "config.json").exists():
        K = ExperimentConfig.load(run_dir / "config.json").portfolio(args.jobs)
    else:
        K = _portfolio(args)
    m = runtime_moments(optimal_restricted_policy(K))
    opt = OptimalStats(m.expectation, m.std)
    taus = args.tau or [TAU_LOOSE, TAU_STRICT]
    text = "metric;tau;value\n"
    for tau in taus:
        text += f"hitting_ratio;{tau};{hitting_ratio(records, opt, tau)!r}\n"
    text += f"ruggedness;;{ruggedness(records)!r}\n" if len(records) >= 3 else "ruggedness;;undefined\n"
    _emit(args, "metrics.csv", text)
    return 0


def cmd_reproduce(args) -> int:
    from lodac.harness import reproduce

    out = args.out or Path("results") / args.target
    if args.target == "table1":
        rows = reproduce.table1(args.ks or range(2, 7), args.ns or (50, 100), out, args.jobs, args.cap)
        for r in rows:
            print(f"n={r.n} k={r.k} portfolio={r.portfolio} runtime/n^2={r.normalized:.7f}")
    elif args.target == "table2":
        rows = reproduce.table2(args.ns or (50, 100), args.ks or (3, 4), out=out, jobs=args.jobs)
        for r in rows:
            rel = ", ".join(f"{v:.2f}" for v in r.relative)
            print(f"k={r.k} {r.family:<16} n={r.n:<4} {r.portfolio}: {rel}")
    elif args.target == "fig1":
        n = args.n or 50
        k = args.k or 3
        records, curve = reproduce.fig1(n, k, out, cap=args.cap if args.cap != DEFAULT_SEARCH_CAP else DEFAULT_SWEEP_CAP)
        print(f"{len(records)} portfolios; best {records[0].portfolio} at {records[0].normalized:.7f} n^2")
    elif args.target == "fig4":
        table = reproduce.fig4(args.n or 50, args.ks or range(2, 9), out=out, jobs=args.jobs, cap=args.cap)
        for family, cells in table.items():
            print(family, " ".join(f"k={k}:{v:.7f}" for k, (_, v) in sorted(cells.items())))
    else:
        params = json.loads(args.agent_params) if args.agent_params else {}
        results = reproduce.training(
            n=args.n or 50, family=args.family or "evenly_spread", ks=args.ks or [args.k or 3],
            seeds=args.seeds or [args.seed], budget=args.budget, agent=args.agent, agent_params=params,
            out=out, jobs=args.jobs,
        )
        for k, seed, log in results:
            s = log.summary()
            print(f"k={k} seed={seed} hitting_ratio(0.25)={s['hitting_ratio_tau_0.25']:.3f} "
                  f"best={s['best_eval']['mean']:.1f} optimal={s['optimal_expected_runtime']:.1f}")
    print(f"outputs in {out}")
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lodac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def policy_flags(p):
        p.add_argument("--policy", type=Path, help="policy text file (n / portfolio / breakpoints or table)")
        p.add_argument("--breakpoints", type=int_list, help="breaking points over the descending portfolio")
        p.add_argument("--table", type=int_list, help="radius for every fitness 0..n-1")
        p.add_argument("--constant", type=int, help="use this radius at every fitness")

    def sim_flags(p):
        p.add_argument("--backend", choices=BACKENDS, default="bitstring")
        p.add_argument("--cutoff", type=int, help="stop runs after this many iterations")

    p = sub.add_parser("eval-policy", help="exact runtime moments of a policy (optimal by default)")
    _common(p, "n", "k", "portfolio", "family", "seed", "runs", "out", "jobs")
    policy_flags(p)
    sim_flags(p)
    p.set_defaults(func=cmd_eval_policy)

    p = sub.add_parser("optimal-policy", help="optimal policy for a portfolio, as breaking points")
    _common(p, "n", "k", "portfolio", "family", "out", "jobs")
    p.set_defaults(func=cmd_optimal_policy)

    p = sub.add_parser("optimal-portfolio", help="exhaustive search for the best size-k portfolio")
    _common(p, "n", "k", "out", "jobs")
    p.add_argument("--cap", type=int, default=DEFAULT_SEARCH_CAP, help="maximum number of candidates")
    p.set_defaults(func=cmd_optimal_portfolio)

    p = sub.add_parser("sweep-portfolios", help="optimal runtime of every size-k portfolio")
    _common(p, "n", "k", "out")
    p.add_argument("--all", action="store_true", help="also list portfolios without radius 1")
    p.add_argument("--cap", type=int, default=DEFAULT_SWEEP_CAP, help="maximum number of portfolios")
    p.set_defaults(func=cmd_sweep_portfolios)

    p = sub.add_parser("simulate", help="Monte-Carlo runtimes of a policy")
    _common(p, "n", "k", "portfolio", "family", "seed", "runs", "out", "jobs")
    policy_flags(p)
    sim_flags(p)
    p.add_argument("--trace", type=Path, help="also write the step trace of one run to this CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train an agent with periodic evaluation")
    _common(p, "n", "k", "portfolio", "family", "seed", "budget", "out", "jobs")
    p.add_argument("--config", type=Path, help="JSON experiment config (flags --seed/--budget override it)")
    p.add_argument("--agent", choices=("ddqn", "tabular"), default="ddqn")
    p.add_argument("--agent-params", help="JSON object of agent hyperparameters")
    p.add_argument("--backend", choices=BACKENDS, default="bitstring")
    p.add_argument("--eval-every", type=int, default=2000)
    p.add_argument("--eval-runs", type=int, default=50)
    p.add_argument("--final-runs", type=int, default=2000)
    p.add_argument("--tau", type=float, default=0.25, help="hit threshold in optimal standard deviations")
    p.add_argument("--checkpoint-every", type=int, default=0, help="steps between resumable checkpoints")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint in --out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("metrics", help="hitting ratio and ruggedness of an evaluation log")
    _common(p, "n", "k", "portfolio", "family", "out", "jobs")
    p.add_argument("--log", required=True, help="run directory or evaluations.csv")
    p.add_argument("--tau", type=float, action="append", help="threshold(s); default 0.25 and 0.0025")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("reproduce", help="regenerate a reference table or figure")
    p.add_argument("target", choices=("table1", "table2", "fig1", "fig4", "training"))
    _common(p, "n", "k", "family", "seed", "budget", "out", "jobs")
    p.add_argument("--ns", type=int_list, help="dimensions, e.g. 50,100")
    p.add_argument("--ks", type=int_list, help="portfolio sizes, e.g. 2-6")
    p.add_argument("--seeds", type=int_list, help="training seeds, e.g. 0-2")
    p.add_argument("--agent", choices=("ddqn", "tabular"), default="ddqn")
    p.add_argument("--agent-params", help="JSON object of agent hyperparameters")
    p.add_argument("--cap", type=int, default=DEFAULT_SEARCH_CAP, help="enumeration cap")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.seed_given = "--seed" in argv
    try:
        return args.func(args)
    except LodacError as exc:
        print(f"lodac: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"lodac: error: {exc}", file=sys.stderr)
        return InvalidArgumentError.exit_code


if __name__ == "__main__":
    sys.exit(main())
