import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lodac.errors import InvalidArgumentError, RepresentationError, UnsolvablePortfolioError
from lodac.policy import (
    Policy,
    Portfolio,
    breaking_points_bisect,
    breaking_points_linear,
    constant_policy,
    expected_runtime,
    optimal_full_policy,
    optimal_restricted_policy,
    policy_from_text,
    policy_lookup,
    policy_to_text,
    runtime_moments,
    runtime_variance,
)
from lodac.core import improvement_probability
from lodac.simulator import sample_runtimes


def exact_q(r, i, n):
    return Fraction(math.comb(n - i - 1, r - 1), math.comb(n, r)) if 0 < r <= n - i else Fraction(0)


def exact_runtime(table, n):
    return sum(Fraction(1, 2) / exact_q(r, i, n) for i, r in enumerate(table))


def argmax_table(K):
    # per-fitness argmax in exact arithmetic, ties to the smaller radius
    n = K.n
    table = []
    for i in range(n):
        vals = [exact_q(r, i, n) for r in K.radii]
        table.append(K.radii[vals.index(max(vals))])
    return tuple(table)


@st.composite
def portfolios(draw, max_n=100):
    n = draw(st.integers(2, max_n))
    extra = draw(st.sets(st.integers(2, n), max_size=min(7, n - 1)))
    return Portfolio.of(n, {1} | extra)


# -- portfolio & policy containers ----------------------------------------------


def test_portfolio_validation():
    with pytest.raises(InvalidArgumentError):
        Portfolio(10, ())
    with pytest.raises(InvalidArgumentError):
        Portfolio(10, (2, 1))
    with pytest.raises(InvalidArgumentError):
        Portfolio(10, (1, 11))
    K = Portfolio.of(10, [6, 1, 2, 2])
    assert K.radii == (1, 2, 6)
    assert K.descending == (6, 2, 1)
    assert K.k == 3 and K.solvable
    assert not Portfolio(10, (2, 3)).solvable


def test_policy_representations_round_trip():
    K = Portfolio(50, (1, 2, 6))
    p = optimal_restricted_policy(K)
    bp = p.as_breakpoints()
    assert bp.breakpoints == (11, 24)
    assert bp.as_table().to_table() == p.to_table()
    assert bp == p
    for i in range(50):
        assert policy_lookup(bp, i) == p(i)
    assert p(0) == 6 and p(11) == 6 and p(12) == 2 and p(24) == 2 and p(25) == 1


def test_policy_validation():
    K = Portfolio(10, (1, 3))
    with pytest.raises(InvalidArgumentError):
        Policy(K, table=(1,) * 9)
    with pytest.raises(InvalidArgumentError):
        Policy(K, table=(2,) * 10)
    with pytest.raises(InvalidArgumentError):
        Policy(K, breakpoints=(3, 4))
    with pytest.raises(InvalidArgumentError):
        Policy(K, breakpoints=(10,))


def test_non_monotone_table_has_no_breakpoints():
    K = Portfolio(10, (1, 3))
    p = Policy(K, table=(1, 3) + (1,) * 8)
    assert not p.is_monotone
    with pytest.raises(RepresentationError):
        p.to_breakpoints()


def test_unsolvable_portfolio_rejected():
    with pytest.raises(UnsolvablePortfolioError):
        optimal_restricted_policy(Portfolio(10, (2, 3)))
    with pytest.raises(UnsolvablePortfolioError):
        breaking_points_bisect(Portfolio(10, (2, 3)))


# -- runtimes ----------------------------------------------------------------------


@pytest.mark.parametrize("n, expected", [(50, 1250.0), (100, 5000.0), (1, 0.5), (7, 24.5)])
def test_constant_one_runtime_is_half_n_squared(n, expected):
    assert expected_runtime(constant_policy(Portfolio(n, (1,)), 1)) == expected


def test_runtime_against_rational_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = int(rng.integers(2, 60))
        K = Portfolio.of(n, {1} | set(rng.integers(1, n + 1, 3).tolist()))
        p = optimal_restricted_policy(K)
        exact = exact_runtime(p.to_table(), n)
        assert expected_runtime(p) == pytest.approx(float(exact), rel=1e-12)


def test_unreachable_level_gives_infinite_runtime():
    K = Portfolio(10, (1, 5))
    p = constant_policy(K, 5)
    assert expected_runtime(p) == math.inf
    assert runtime_variance(p) == math.inf


def test_variance_matches_monte_carlo():
    p = optimal_restricted_policy(Portfolio(30, (1, 2, 6)))
    m = runtime_moments(p)
    steps, reached = sample_runtimes(p, 20000, base_seed=3, backend="surrogate")
    assert reached.all()
    assert abs(steps.mean() - m.expectation) < 4 * m.std / math.sqrt(len(steps))
    # sample variance of a 20000-run sample: relative error well under 5 %
    assert steps.var(ddof=1) == pytest.approx(m.variance, rel=0.05)


def test_full_portfolio_policy_runtime():
    for n in (50, 100):
        e = expected_runtime(optimal_full_policy(n)) / n**2
        assert 0.387 < e < 0.390


# -- breaking points ----------------------------------------------------------------


def test_optimal_policy_is_per_fitness_argmax_on_random_portfolios():
    rng = np.random.default_rng(11)
    for _ in range(300):
        n = int(rng.integers(2, 101))
        k = int(rng.integers(1, min(8, n) + 1))
        K = Portfolio.of(n, {1} | set(rng.choice(np.arange(2, n + 1), k - 1, replace=False).tolist()) if n > 1 else {1})
        table = optimal_restricted_policy(K).to_table()
        oracle = argmax_table(K)
        # ties may be resolved either way; only the runtime has to agree
        assert exact_runtime(table, n) == exact_runtime(oracle, n)


@settings(max_examples=300, deadline=None)
@given(portfolios())
def test_bisect_equals_linear_scan(K):
    assert breaking_points_bisect(K) == breaking_points_linear(K)


@settings(max_examples=300, deadline=None)
@given(portfolios())
def test_breakpoint_policy_matches_argmax_runtime(K):
    bp = Policy(K, breakpoints=breaking_points_bisect(K))
    best = expected_runtime(optimal_restricted_policy(K))
    assert expected_runtime(bp) == pytest.approx(best, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(portfolios(max_n=40), st.data())
def test_no_policy_beats_the_optimal_one(K, data):
    table = tuple(data.draw(st.sampled_from(K.radii)) for _ in range(K.n))
    # every level must stay leavable for the comparison to be meaningful
    if any(improvement_probability(r, i, K.n) == 0 for i, r in enumerate(table)):
        return
    assert expected_runtime(Policy(K, table=table)) >= expected_runtime(optimal_restricted_policy(K)) * (1 - 1e-12)


def test_breakpoints_are_non_decreasing():
    rng = np.random.default_rng(5)
    for _ in range(200):
        n = int(rng.integers(3, 200))
        K = Portfolio.of(n, {1} | set(rng.integers(2, n + 1, 5).tolist()))
        b = breaking_points_bisect(K)
        assert list(b) == sorted(b)
        assert all(0 <= v <= n - 1 for v in b)


TABLE2 = {
    (3, "optimal"): ((0.22, 0.48), (0.23, 0.49)),
    (3, "powers_of_2"): ((0.26, 0.48), (0.28, 0.49)),
    (3, "initial_segment"): ((0.30, 0.48), (0.32, 0.49)),
    (3, "evenly_spread"): ((0.0, 0.12), (0.0, 0.08)),
    (4, "optimal"): ((0.10, 0.26, 0.48), (0.12, 0.28, 0.49)),
    (4, "powers_of_2"): ((0.14, 0.26, 0.48), (0.15, 0.28, 0.49)),
    (4, "initial_segment"): ((0.22, 0.30, 0.48), (0.24, 0.32, 0.49)),
    (4, "evenly_spread"): ((0.0, 0.02, 0.16), (0.0, 0.01, 0.10)),
}
RADII = {
    (3, "optimal"): ((1, 2, 6), (1, 2, 6)),
    (3, "powers_of_2"): ((1, 2, 4), (1, 2, 4)),
    (3, "initial_segment"): ((1, 2, 3), (1, 2, 3)),
    (3, "evenly_spread"): ((1, 17, 33), (1, 34, 67)),
    (4, "optimal"): ((1, 2, 4, 11), (1, 2, 4, 11)),
    (4, "powers_of_2"): ((1, 2, 4, 8), (1, 2, 4, 8)),
    (4, "initial_segment"): ((1, 2, 3, 4), (1, 2, 3, 4)),
    (4, "evenly_spread"): ((1, 13, 25, 37), (1, 26, 51, 76)),
}


@pytest.mark.parametrize("key", sorted(TABLE2))
@pytest.mark.parametrize("col, n", [(0, 50), (1, 100)])
def test_relative_breakpoints_of_reference_portfolios(key, col, n):
    K = Portfolio(n, RADII[key][col])
    rel = tuple(round(b / n, 2) for b in breaking_points_bisect(K))
    assert rel == TABLE2[key][col]


def test_tied_breakpoint_choices_have_equal_runtime():
    # at n=50 radii 33 and 17 improve fitness 1 with the same probability
    K = Portfolio(50, (1, 17, 33))
    assert improvement_probability(33, 1, 50) == improvement_probability(17, 1, 50)
    a = expected_runtime(Policy(K, breakpoints=(0, 6)))
    b = expected_runtime(Policy(K, breakpoints=(1, 6)))
    assert a == pytest.approx(b, rel=1e-12)


# -- serialization ------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(portfolios(max_n=60))
def test_text_round_trip(K):
    p = optimal_restricted_policy(K)
    for q in (p.as_table(), p.as_breakpoints()):
        back = policy_from_text(policy_to_text(q))
        assert back == q
        assert back.to_table() == q.to_table()


@pytest.mark.parametrize(
    "text",
    ["n: 5\n", "n: 5\nportfolio: 1,2\n", "n: 5\nportfolio: 1,2\ntable: 1,1\n", "garbage\n", "n: x\nportfolio: 1\n"],
)
def test_malformed_policy_text(text):
    with pytest.raises((RepresentationError, InvalidArgumentError)):
        policy_from_text(text)
