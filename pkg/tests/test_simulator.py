import math

import numpy as np
import pytest
from scipy import stats

from lodac.core import Instance, improvement_probability, q_matrix
from lodac.kernels import python_backend
from lodac.policy import Portfolio, Policy, constant_policy, expected_runtime, optimal_restricted_policy
from lodac.simulator import (
    CUTOFF,
    OPTIMUM_FOUND,
    RunStats,
    SurrogateRLS,
    estimate_runtime,
    run_rls,
    run_surrogate,
    sample_runtimes,
)


def const1(n):
    return constant_policy(Portfolio(n, (1,)), 1)


def random_policy(n, rng, k=4):
    radii = {1} | set(rng.integers(2, n // 2, k - 1).tolist())
    K = Portfolio.of(n, radii)
    # a random, not necessarily monotone policy; each level picks among radii at
    # least half as good as the best one so that runs stay short
    table = []
    for i in range(n):
        qs = {r: improvement_probability(r, i, n) for r in K.radii}
        best = max(qs.values())
        table.append(int(rng.choice([r for r, q in qs.items() if q >= best / 2])))
    return Policy(K, table=tuple(table))


# -- traces ---------------------------------------------------------------------------


@pytest.mark.parametrize("run", [run_rls, run_surrogate])
def test_trace_invariants(run):
    p = optimal_restricted_policy(Portfolio(40, (1, 2, 6)))
    for seed in range(20):
        tr = run(p, rng=seed)
        assert np.all(tr.fitness_after >= tr.fitness_before)
        assert np.array_equal(tr.reward, tr.fitness_after - tr.fitness_before - 1)
        assert tr.terminal == OPTIMUM_FOUND and tr.final_fitness == 40
        assert tr.total_steps == len(tr.action)
        assert tr.total_reward == (40 - tr.initial_fitness) - tr.total_steps
        assert np.array_equal(tr.action, [p(int(f)) for f in tr.fitness_before])


def test_optimal_initial_sample_costs_nothing():
    # n=1: the initial bit is 1 with probability 1/2
    costs = {run_rls(const1(1), rng=s).total_steps for s in range(40) if run_rls(const1(1), rng=s).initial_fitness == 1}
    assert costs == {0}


def test_zero_cutoff_and_stuck_policies():
    p = const1(30)
    tr = run_rls(p, rng=1, cutoff=0)
    assert tr.terminal == CUTOFF and tr.total_steps == 0
    K = Portfolio(30, (0, 1))
    stuck = constant_policy(K, 0)
    for run in (run_rls, run_surrogate):
        tr = run(stuck, rng=2, cutoff=100)
        assert tr.terminal == CUTOFF and tr.total_steps == 100
        assert np.all(tr.fitness_after == tr.initial_fitness)


def test_compressed_trace_keeps_improvements_only(tmp_path):
    p = const1(30)
    full = run_rls(p, rng=5, compressed=False)
    comp = run_rls(p, rng=5, compressed=True)
    improving = full.fitness_after != full.fitness_before
    assert np.array_equal(comp.step_index, np.flatnonzero(improving))
    assert comp.total_steps == full.total_steps
    path = full.to_csv(tmp_path / "trace.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "step;fitness_before;action;fitness_after;reward"
    assert len(lines) == full.total_steps + 1


# -- determinism ------------------------------------------------------------------------


def test_estimate_runtime_is_reproducible():
    p = optimal_restricted_policy(Portfolio(30, (1, 2, 6)))
    a = estimate_runtime(p, runs=50, base_seed=7)
    b = estimate_runtime(p, runs=50, base_seed=7)
    assert a == b
    assert estimate_runtime(p, runs=50, base_seed=8) != a
    single = estimate_runtime(p, runs=1, base_seed=7)
    assert single.std == 0.0 and single.min <= single.mean <= single.max


def test_run_stats():
    st = RunStats.from_samples([1, 2, 3, 4])
    assert st.mean == 2.5 and st.min == 1 and st.max == 4
    assert st.stderr == pytest.approx(st.std / 2)


def test_prefix_of_runs_does_not_depend_on_run_count():
    p = const1(20)
    a, _ = sample_runtimes(p, 10, base_seed=3)
    b, _ = sample_runtimes(p, 30, base_seed=3)
    assert np.array_equal(a, b[:10])


# -- statistics ------------------------------------------------------------------------


def test_constant_one_mean_runtime():
    steps, reached = sample_runtimes(const1(50), 20000, base_seed=1)
    assert reached.all()
    se = steps.std(ddof=1) / math.sqrt(steps.size)
    assert abs(steps.mean() - 1250.0) < 4 * se


def test_optimal_policy_mean_runtime_n50():
    p = optimal_restricted_policy(Portfolio(50, (1, 2, 6)))
    st = estimate_runtime(p, runs=2000, base_seed=4)
    assert abs(st.mean - expected_runtime(p)) < 4 * st.std / math.sqrt(2000)


def test_runtime_is_the_same_on_every_instance():
    n = 30
    p = optimal_restricted_policy(Portfolio(n, (1, 2, 6)))
    canon, _ = sample_runtimes(p, 10000, base_seed=10)
    inst = Instance.random(n, np.random.default_rng(99))
    other, _ = sample_runtimes(p, 10000, base_seed=11, inst=inst)
    assert stats.ks_2samp(canon, other).pvalue > 0.01


def test_initial_fitness_law():
    n, runs = 12, 20000
    counts = np.zeros(n + 1)
    for s in range(runs):
        counts[run_rls(const1(n), rng=s, cutoff=0).initial_fitness] += 1
    probs = np.array([2.0 ** -(i + 1) for i in range(n)] + [2.0**-n])
    # pool the tail so every expected count is at least 5
    cut = 9
    obs = np.append(counts[:cut], counts[cut:].sum())
    exp = np.append(probs[:cut], probs[cut:].sum()) * runs
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_each_level_is_visited_with_probability_one_half():
    n, runs = 20, 4000
    visited = np.zeros(n)
    for s in range(runs):
        tr = run_rls(const1(n), rng=s)
        levels = set(tr.fitness_before.tolist())
        if tr.total_steps == 0:
            continue
        visited[list(levels)] += 1
    # runs with an optimal start visit no level; they have probability 2^-n, negligible here
    sigma = math.sqrt(runs * 0.25)
    assert np.all(np.abs(visited - runs / 2) < 4 * sigma)


def test_surrogate_improvement_frequency():
    n, i, r, reps = 30, 5, 4, 100000
    proc = SurrogateRLS(n, np.random.PCG64(0))
    hits = 0
    for _ in range(reps):
        proc.fitness = i
        hits += proc.step(r) > i
    q = improvement_probability(r, i, n)
    assert abs(hits - reps * q) < 4 * math.sqrt(reps * q * (1 - q))


def test_surrogate_free_riders_are_geometric():
    n, i, reps = 30, 3, 20000
    qmat = np.ascontiguousarray(q_matrix(n))
    bg = np.random.PCG64(1)
    gains = []
    while len(gains) < reps:
        j = python_backend.surrogate_step(i, 1, qmat, bg)
        if j > i:
            gains.append(j - i - 1)
    gains = np.array(gains)
    obs = np.bincount(np.minimum(gains, 6), minlength=7)
    probs = np.array([0.5 ** (g + 1) for g in range(6)] + [0.5**6])
    assert stats.chisquare(obs, probs * reps).pvalue > 0.01


def test_surrogate_and_bitstring_agree_for_random_policies():
    rng = np.random.default_rng(21)
    n = 30
    for idx in range(5):
        p = random_policy(n, rng)
        a, _ = sample_runtimes(p, 5000, base_seed=100 + idx, backend="bitstring")
        b, _ = sample_runtimes(p, 5000, base_seed=200 + idx, backend="surrogate")
        se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(5000)
        assert abs(a.mean() - b.mean()) < 4 * se
        assert stats.ks_2samp(a, b).pvalue > 0.01
        assert abs(a.mean() - expected_runtime(p)) < 4 * a.std(ddof=1) / math.sqrt(5000)


def test_policy_dimension_is_checked():
    from lodac.errors import InvalidArgumentError

    with pytest.raises(InvalidArgumentError):
        run_rls(const1(10), inst=Instance.canonical(12))
    with pytest.raises(InvalidArgumentError):
        sample_runtimes(const1(10), 0)
    with pytest.raises(InvalidArgumentError):
        sample_runtimes(const1(10), 5, backend="gpu")
