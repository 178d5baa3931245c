import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_stationary

from lobmarkov.chainbuilder import N_STATES, count_transitions
from lobmarkov.dtmc import (
    ReducibleChainError,
    Tpm,
    average_tpms,
    chain_structure,
    estimate_tpm,
    pool_counts,
    simulate,
    stationary,
)
from lobmarkov.synth import planted_tpm


def random_tpm(seed, k=N_STATES):
    return np.random.default_rng(seed).dirichlet(np.ones(k), size=k)


def test_mle_rows():
    n = np.zeros((9, 9), dtype=int)
    n[0, 0], n[0, 1], n[1, 0] = 3, 1, 2
    t = estimate_tpm(n)
    assert t.p[0, 0] == 0.75 and t.p[0, 1] == 0.25 and t.p[1, 0] == 1.0
    assert t.degenerate_rows == list(range(2, 9))
    assert all(t.p[i, i] == 1.0 for i in range(2, 9))
    assert np.all(t.p.sum(1) == 1.0)


def test_smoothing_supports_every_row():
    t = estimate_tpm(np.zeros((9, 9)), smoothing=0.5)
    assert t.support.all() and np.allclose(t.p, 1 / 9)
    with pytest.raises(ValueError):
        estimate_tpm(np.zeros((9, 9)), smoothing=-1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=2, max_size=400))
def test_estimated_rows_sum_to_one(states):
    t = estimate_tpm(count_transitions(np.array(states)))
    assert np.all(np.abs(t.p.sum(1) - 1.0) <= 1e-15)
    assert np.all(t.p >= 0)


def test_tpm_validation():
    with pytest.raises(ValueError):
        Tpm(np.full((9, 9), 0.2))
    with pytest.raises(ValueError):
        Tpm(-np.eye(9))


@pytest.mark.parametrize("seed", range(5))
def test_stationary_matches_power_iteration(seed):
    p = random_tpm(seed)
    s = stationary(Tpm(p))
    assert np.allclose(s.pi, brute_stationary(p), atol=1e-12)
    assert s.residual <= 1e-14


def test_two_state_closed_form():
    a, b = 0.3, 0.1
    p = np.array([[1 - a, a], [b, 1 - b]])
    pi = stationary(Tpm(p)).pi
    assert pi == pytest.approx([b / (a + b), a / (a + b)], abs=1e-15)


def test_transient_states_get_zero_mass():
    p = np.array([[0.5, 0.5, 0.0], [0.0, 0.2, 0.8], [0.0, 0.6, 0.4]])
    s = stationary(Tpm(p))
    assert s.pi[0] == 0.0 and s.support_class == (1, 2)


def test_multiple_closed_classes_raise():
    p = np.eye(3)
    with pytest.raises(ReducibleChainError) as e:
        stationary(Tpm(p))
    assert len(e.value.classes) == 3


def test_unsupported_singletons_ignored():
    n = np.zeros((9, 9), dtype=int)
    n[3:6, 3:6] = [[5, 3, 2], [2, 6, 2], [1, 3, 4]]
    t = estimate_tpm(n)
    st_ = chain_structure(t)
    assert not st_.is_irreducible and sorted(st_.unsupported) == [0, 1, 2, 6, 7, 8]
    s = stationary(t)
    assert s.support_class == (3, 4, 5)
    assert np.max(np.abs(s.pi @ t.p - s.pi)) <= 1e-15


def test_pool_and_average():
    a = count_transitions([0, 1, 0, 1])
    b = count_transitions([1, 1, 1])
    assert pool_counts([a, b]).total == 5
    avg = average_tpms([estimate_tpm(a), estimate_tpm(b)])
    assert avg.p[0, 1] == 1.0 and avg.p[1, 0] == pytest.approx(0.5) and avg.p[1, 1] == pytest.approx(0.5)
    assert avg.support[:2].all() and not avg.support[2:].any()


def test_simulate_reproducible_and_edge_cases():
    p = planted_tpm(0.6)
    pi = stationary(Tpm(p)).pi
    a = simulate(p, pi, 1000, seed=3).states
    b = simulate(p, pi, 1000, seed=3).states
    assert np.array_equal(a, b) and a.size == 1000
    assert simulate(p, pi, 0, seed=1).states.size == 0
    with pytest.raises(ValueError):
        simulate(p, np.ones(9), 10)
    det = np.roll(np.eye(9), 1, axis=1)
    s = simulate(det, np.eye(9)[0], 20, seed=0).states
    assert s.tolist() == [i % 9 for i in range(20)]
