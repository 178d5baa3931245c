import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import MRT_HMC_T1_ASK, reference_metric_rows

from lobmarkov.chainbuilder import N_STATES
from lobmarkov.dtmc import Tpm, estimate_tpm, stationary
from lobmarkov.metrics import (
    chain_metrics,
    eigen_moduli,
    entropy_rate,
    mean_recurrence,
    mixing_rate,
    relaxation,
    spectral_gap,
    stationary_entropy,
    tv_bound,
)
from lobmarkov.synth import planted_tpm


def two_state(a, b):
    return np.array([[1 - a, a], [b, 1 - b]])


@pytest.mark.parametrize("a,b", [(0.3, 0.1), (0.05, 0.9), (0.5, 0.5)])
def test_two_state_spectrum(a, b):
    p = two_state(a, b)
    lam2 = abs(1 - a - b)
    assert spectral_gap(p) == pytest.approx(1 - lam2, abs=1e-14)
    assert mixing_rate(p) == pytest.approx(lam2, abs=1e-14)
    t_rel, rate = relaxation(p)
    assert t_rel == pytest.approx(1 / (1 - lam2))
    assert rate == (math.inf if lam2 == 0 else pytest.approx(-math.log(lam2)))


def test_moduli_sorted_with_unit_leader():
    p = planted_tpm(0.55)
    m = eigen_moduli(p)
    assert m[0] == 1.0 and np.all(np.diff(m) <= 0)
    assert np.allclose(np.sort(np.abs(np.linalg.eigvals(p)))[::-1], m, atol=1e-12)


def test_periodic_chain_has_zero_gap():
    p = np.roll(np.eye(4), 1, axis=1)
    assert spectral_gap(p) == pytest.approx(0.0, abs=1e-12)
    assert relaxation(p)[0] == math.inf
    assert "no decay" in tv_bound(math.inf, 5)
    assert tv_bound(2.0, 4).endswith(f"{math.exp(-2):.6g}")


def test_entropy_closed_forms():
    u = np.full((9, 9), 1 / 9)
    pi = np.full(9, 1 / 9)
    assert entropy_rate(u, pi) == pytest.approx(math.log(9), abs=1e-12)
    assert entropy_rate(u, pi, base=2) == pytest.approx(math.log2(9), abs=1e-12)
    a, b = 0.2, 0.4
    p = two_state(a, b)
    pi2 = np.array([b, a]) / (a + b)
    h = lambda x: -x * math.log(x) - (1 - x) * math.log(1 - x)
    assert entropy_rate(p, pi2) == pytest.approx(pi2[0] * h(a) + pi2[1] * h(b), abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_entropy_ordering(seed):
    p = np.random.default_rng(seed).dirichlet(np.ones(N_STATES) * 0.7, size=N_STATES)
    pi = stationary(Tpm(p)).pi
    assert 0 <= entropy_rate(p, pi) <= stationary_entropy(pi) + 1e-12 <= math.log(9) + 2e-12


def test_mean_recurrence():
    assert mean_recurrence([0.5, 0.25, 0.25, 0.0]).tolist() == [2.0, 4.0, 4.0, math.inf]


def test_chain_metrics_restricts_spectrum_to_supported_states():
    n = np.zeros((9, 9), dtype=int)
    n[3:6, 3:6] = [[5, 3, 2], [2, 6, 2], [1, 3, 4]]
    t = estimate_tpm(n)
    with pytest.warns(RuntimeWarning):
        m = chain_metrics(t)
    sub = t.p[3:6, 3:6]
    assert m.spectral_gap == pytest.approx(spectral_gap(sub), abs=1e-14)
    assert m.spectrum_states == [3, 4, 5]
    assert m.mrt[0] == math.inf and m.warnings
    d = m.to_dict()
    assert d["mean_recurrence"][0] == "inf"


def test_chain_metrics_consistency():
    p = planted_tpm(0.6)
    m = chain_metrics(Tpm(p))
    assert m.mixing_rate == pytest.approx(1 - m.spectral_gap, abs=1e-15)
    assert m.relaxation_time == pytest.approx(1 / m.spectral_gap)
    assert m.relaxation_rate_log == pytest.approx(-math.log(m.mixing_rate))
    assert np.allclose(m.mrt * m.stationary, 1.0)


# -- reference values -----------------------------------------------------


def test_reference_mixing_is_one_minus_gap():
    for tier, iv, side, gap, _, _, mix in reference_metric_rows():
        assert round(1 - gap, 3) == pytest.approx(mix, abs=1e-12)


def test_reference_relaxation_consistent_within_rounding():
    # every printed rate is reachable from some unrounded mixing value that
    # rounds to the printed one
    for tier, iv, side, _, relax, _, mix in reference_metric_rows():
        lo, hi = -math.log(mix + 0.0005), -math.log(mix - 0.0005)
        assert lo - 0.0005 <= relax <= hi + 0.0005, (tier, iv, side)


def test_reference_mean_recurrence_row():
    pi = 1.0 / np.array(MRT_HMC_T1_ASK)
    assert mean_recurrence(pi) == pytest.approx(MRT_HMC_T1_ASK, rel=1e-12)
    # the printed times are rounded, so their reciprocals only nearly sum to one
    assert pi.sum() == pytest.approx(1.0, abs=0.02)
