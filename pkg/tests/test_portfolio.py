import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from lodac.errors import EnumerationTooLargeError, FamilyUndefinedError, InvalidArgumentError
from lodac.policy import Portfolio, expected_runtime, optimal_restricted_policy
from lodac.portfolio import (
    cumulative_curve,
    family_defined,
    family_portfolio,
    make_portfolio,
    powers_of_2_max_k,
    read_sweep_csv,
    search_optimal_portfolio,
    sweep_all_portfolios,
    write_sweep_csv,
)


def exact_optimal_runtime(radii, n):
    """Optimal-policy expected runtime by exact per-level maximisation (no policy code involved)."""
    total = Fraction(0)
    for i in range(n):
        best = max(Fraction(math.comb(n - i - 1, r - 1), math.comb(n, r)) if r <= n - i else Fraction(0) for r in radii)
        total += Fraction(1, 2) / best
    return total


def brute_force_best(k, n):
    best = None
    for combo in itertools.combinations(range(2, n + 1), k - 1):
        val = exact_optimal_runtime((1,) + combo, n)
        if best is None or val < best[0]:
            best = (val, (1,) + combo)
    return best


# -- families ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kind, k, n, radii",
    [
        ("powers_of_2", 3, 50, (1, 2, 4)),
        ("powers_of_2", 6, 50, (1, 2, 4, 8, 16, 32)),
        ("initial_segment", 4, 50, (1, 2, 3, 4)),
        ("evenly_spread", 3, 50, (1, 17, 33)),
        ("evenly_spread", 3, 100, (1, 34, 67)),
        ("evenly_spread", 4, 50, (1, 13, 25, 37)),
        ("evenly_spread", 4, 100, (1, 26, 51, 76)),
    ],
)
def test_family_members(kind, k, n, radii):
    assert make_portfolio(kind, k, n).radii == radii


def test_powers_of_2_domain():
    assert powers_of_2_max_k(50) == 6
    assert powers_of_2_max_k(64) == 7
    assert family_defined("powers_of_2", 6, 50)
    assert not family_defined("powers_of_2", 7, 50)
    with pytest.raises(FamilyUndefinedError):
        make_portfolio("powers_of_2", 7, 50)


def test_family_errors():
    with pytest.raises(FamilyUndefinedError):
        make_portfolio("golden_ratio", 3, 50)
    with pytest.raises(FamilyUndefinedError):
        make_portfolio("optimal", 3, 50)
    with pytest.raises(FamilyUndefinedError):
        make_portfolio("initial_segment", 1, 50)


def test_family_portfolio_dispatch():
    assert family_portfolio("optimal", 3, 50).radii == (1, 2, 6)
    assert family_portfolio("initial_segment", 3, 50).radii == (1, 2, 3)


# -- exhaustive search -----------------------------------------------------------------


@pytest.mark.parametrize("k, n", [(2, 12), (3, 12), (4, 15), (2, 30), (3, 25)])
def test_search_matches_rational_brute_force(k, n):
    val, radii = brute_force_best(k, n)
    K, m = search_optimal_portfolio(k, n)
    assert K.radii == radii
    assert m.expectation == pytest.approx(float(val), rel=1e-12)


def test_search_small_table_rows_exactly():
    # the k=2 and k=3 rows at n=50, against exact rational arithmetic
    for k, radii in ((2, (1, 4)), (3, (1, 2, 6))):
        val, best = brute_force_best(k, 50)
        assert best == radii
        K, m = search_optimal_portfolio(k, 50)
        assert K.radii == radii
        assert m.expectation == pytest.approx(float(val), rel=1e-12)


def test_search_is_independent_of_jobs():
    for k, n in ((3, 40), (4, 30)):
        assert search_optimal_portfolio(k, n, jobs=1) == search_optimal_portfolio(k, n, jobs=2)


def test_search_cap_and_arguments():
    with pytest.raises(EnumerationTooLargeError):
        search_optimal_portfolio(4, 50, cap=1000)
    with pytest.raises(InvalidArgumentError):
        search_optimal_portfolio(1, 50)
    with pytest.raises(InvalidArgumentError):
        search_optimal_portfolio(5, 4)


def test_k_equal_n_is_the_full_portfolio():
    K, m = search_optimal_portfolio(8, 8)
    assert K.radii == tuple(range(1, 9))


# -- sweeps ------------------------------------------------------------------------------


def test_sweep_size_order_and_minimum():
    records = sweep_all_portfolios(3, 50)
    assert len(records) == 1176
    values = [r.expected_runtime for r in records]
    assert values == sorted(values)
    assert records[0].portfolio.radii == (1, 2, 6)
    assert records[0].expected_runtime == search_optimal_portfolio(3, 50)[1].expectation


def test_sweep_values_match_policy_engine():
    records = sweep_all_portfolios(3, 20)
    for rec in records:
        exact = expected_runtime(optimal_restricted_policy(rec.portfolio))
        assert rec.expected_runtime == pytest.approx(exact, rel=1e-12)
        assert rec.normalized == pytest.approx(exact / 400, rel=1e-12)


def test_sweep_without_radius_one():
    records = sweep_all_portfolios(2, 10, require_radius_one=False)
    assert len(records) == math.comb(10, 2)
    assert sum(math.isinf(r.expected_runtime) for r in records) == math.comb(9, 2)
    with pytest.raises(EnumerationTooLargeError):
        sweep_all_portfolios(5, 60, cap=10)


def test_cumulative_curve_is_a_cdf():
    curve = cumulative_curve(sweep_all_portfolios(3, 30))
    xs = [x for x, _ in curve]
    ys = [y for _, y in curve]
    assert xs == sorted(xs) and ys == sorted(ys)
    assert 0 < ys[0] and ys[-1] == 1.0


def test_sweep_csv_round_trip(tmp_path):
    records = sweep_all_portfolios(3, 15)
    path = write_sweep_csv(records, tmp_path / "sweep.csv")
    assert read_sweep_csv(path, 15) == records


def test_larger_portfolios_never_hurt():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(5, 120))
        small = {1} | set(rng.integers(2, n + 1, 3).tolist())
        big = small | set(rng.integers(2, n + 1, 2).tolist())
        a = expected_runtime(optimal_restricted_policy(Portfolio.of(n, small)))
        b = expected_runtime(optimal_restricted_policy(Portfolio.of(n, big)))
        assert b <= a


@pytest.mark.parametrize("n", [50, 100])
def test_optimal_runtimes_stay_in_bracket(n):
    rng = np.random.default_rng(n)
    for _ in range(200):
        K = Portfolio.of(n, {1} | set(rng.integers(2, n + 1, int(rng.integers(0, 8))).tolist()))
        e = expected_runtime(optimal_restricted_policy(K)) / n**2
        assert 0.387 <= e <= 0.5
