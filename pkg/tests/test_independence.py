import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from oracles import brute_g, chi2_sf_oracle

from lobmarkov.independence import (
    AcfAccumulator,
    acf,
    average_g_tests,
    chi2_sf,
    expected_counts,
    g_statistic,
    g_test,
)


def test_expected_counts_margins():
    t = np.array([[10, 20], [30, 40]])
    e = expected_counts(t)
    assert np.allclose(e.sum(0), t.sum(0)) and np.allclose(e.sum(1), t.sum(1))


def test_g_matches_double_sum_and_scipy():
    t = np.array([[12, 5, 0], [3, 20, 7], [1, 2, 30]])
    assert g_statistic(t) == pytest.approx(brute_g(t), rel=1e-12)
    want = stats.chi2_contingency(t, lambda_="log-likelihood", correction=False)
    assert g_statistic(t) == pytest.approx(want.statistic, rel=1e-10)


def test_perfectly_independent_table():
    t = np.outer([1, 2, 3], [4, 5, 6])
    r = g_test(t)
    assert r.g == pytest.approx(0.0, abs=1e-10) and r.p_value == pytest.approx(1.0)
    assert not r.reject


def test_zero_rows_and_columns_dropped():
    t = np.zeros((9, 9), dtype=int)
    t[:3, :3] = [[50, 5, 5], [5, 50, 5], [5, 5, 50]]
    r = g_test(t)
    assert (r.dropped_rows, r.dropped_cols, r.df) == (6, 6, 4)
    assert r.reject


def test_degenerate_table_inconclusive():
    r = g_test([[5, 0], [0, 0]])
    assert r.inconclusive and math.isnan(r.p_value)


def test_average():
    rs = [g_test([[30, 10], [10, 30]]), g_test([[20, 20], [20, 20]])]
    avg = average_g_tests(rs)
    assert avg["n_tests"] == 2 and avg["reject_fraction"] == 0.5


@pytest.mark.parametrize("x,df", [(0.5, 1), (3.84, 1), (10.0, 4), (64.0, 64), (150.0, 64), (300.0, 9)])
def test_chi2_sf_oracle(x, df):
    assert chi2_sf(x, df) == pytest.approx(chi2_sf_oracle(x, df), rel=1e-10)


def test_chi2_sf_domain():
    assert chi2_sf(0.0, 3) == 1.0
    with pytest.raises(ValueError):
        chi2_sf(1.0, 0)
    with pytest.raises(ValueError):
        chi2_sf(-1.0, 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.integers(0, 40), min_size=3, max_size=3), min_size=3, max_size=3))
def test_g_nonnegative(rows):
    t = np.array(rows)
    if t.sum() == 0:
        return
    r = g_test(t)
    assert r.inconclusive or (r.g >= -1e-9 and 0.0 <= r.p_value <= 1.0)


def test_acf_ar1():
    rng = np.random.default_rng(1)
    x = np.zeros(20_000)
    for i in range(1, x.size):
        x[i] = 0.6 * x[i - 1] + rng.normal()
    r = acf(x, 3)
    assert r.values[0] == pytest.approx(0.6, abs=0.03)
    assert r.values[1] == pytest.approx(0.36, abs=0.03)
    assert r.threshold == pytest.approx(1 / math.sqrt(x.size))
    assert all(r.significant())


def test_acf_constant_and_short():
    assert acf([2.0] * 10, 2).constant
    with pytest.raises(ValueError):
        acf([1.0, 2.0], 2)


def test_accumulator_matches_single_series_and_merges():
    rng = np.random.default_rng(3)
    x = rng.normal(size=500)
    acc = AcfAccumulator(4)
    acc.add(x)
    r1, r2 = acf(x, 4), acc.result()
    assert np.allclose(r1.values, r2.values, atol=1e-12)
    a, b, both = AcfAccumulator(4), AcfAccumulator(4), AcfAccumulator(4)
    parts = [rng.normal(size=n) for n in (50, 80, 3, 120)]
    for i, p in enumerate(parts):
        (a if i % 2 else b).add(p)
        both.add(p)
    b.merge(a)
    assert b.result().n == both.result().n
    assert np.allclose(b.result().values, both.result().values, atol=1e-12)
    again = AcfAccumulator.from_dict(both.to_dict())
    assert again.result().values == both.result().values
