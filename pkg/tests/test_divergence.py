import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import jensenshannon

from lobmarkov.divergence import check_distribution, jsd, jsd_matrix, kld

dist = st.lists(st.floats(0, 1, allow_nan=False), min_size=9, max_size=9).filter(
    lambda v: sum(v) > 1e-3).map(lambda v: np.array(v) / sum(v))


def test_kld_basics():
    p = np.array([0.5, 0.5])
    assert kld(p, p) == 0.0
    assert kld([1.0, 0.0], p) == pytest.approx(1.0)
    assert kld(p, [1.0, 0.0]) == math.inf


def test_jsd_extremes():
    assert jsd([1, 0], [0, 1]) == pytest.approx(1.0, abs=1e-15)
    assert jsd([1, 0], [0, 1], base=math.e) == pytest.approx(math.log(2))


def test_input_validation():
    with pytest.raises(ValueError):
        check_distribution([0.5, 0.6])
    with pytest.raises(ValueError):
        check_distribution([1.5, -0.5])
    with pytest.raises(ValueError):
        jsd([1.0], [0.5, 0.5])


@settings(max_examples=100)
@given(dist, dist)
def test_jsd_matches_scipy_and_is_symmetric(p, q):
    v = jsd(p, q)
    assert v == jsd(q, p)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(jensenshannon(p, q, base=2) ** 2, abs=1e-12)


@settings(max_examples=100)
@given(dist, dist, dist)
def test_sqrt_jsd_triangle(p, q, r):
    assert math.sqrt(jsd(p, r)) <= math.sqrt(jsd(p, q)) + math.sqrt(jsd(q, r)) + 1e-12


def test_matrix():
    ds = [np.eye(9)[4], np.full(9, 1 / 9), np.eye(9)[4]]
    m = jsd_matrix(ds, ["a", "b", "c"])
    assert np.array_equal(m.values, m.values.T) and np.all(np.diag(m.values) == 0)
    assert m.values[0, 2] == 0.0
    rows = m.to_rows(4)
    assert rows[0] == ["", "a", "b", "c"] and rows[1][1] == "0.0000"
    with pytest.raises(ValueError):
        jsd_matrix(ds[:1])
