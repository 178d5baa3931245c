import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lobmarkov.chainbuilder import (
    N_STATES,
    STATE_NAMES,
    TransitionCounts,
    build_sequence,
    classify,
    classify_array,
    count_transitions,
    decode_letters,
    encode_letters,
    mirror_state,
    pct_change,
    state_histogram,
)


@pytest.mark.parametrize("x,state", [
    (-7.0, 0), (-5.0, 1), (-2.0000001, 1), (-2.0, 2), (-1.5, 2), (-1.0, 3), (-1e-6, 3),
    (0.0, 4), (1e-9, 4), (-1e-9, 4), (1e-8, 5), (1.0, 5), (1.0000001, 6), (2.0, 6),
    (3.0, 7), (5.0, 7), (5.0000001, 8), (400.0, 8),
])
def test_band_boundaries(x, state):
    assert classify(x) == state
    assert classify_array([x])[0] == state


def test_state_names():
    assert STATE_NAMES[0] == "S1" and STATE_NAMES[-1] == "S9" and len(STATE_NAMES) == N_STATES


def test_classify_rejects_nonfinite():
    for bad in (math.nan, math.inf):
        with pytest.raises(ValueError):
            classify(bad)


def test_pct_change():
    assert pct_change(100.0, 101.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pct_change(0.0, 1.0)


@given(st.floats(-50, 50, allow_nan=False))
def test_scalar_and_vector_agree(x):
    assert classify(x) == classify_array(np.array([x]))[0]


@given(st.floats(1e-6, 50, allow_nan=False))
def test_mirror_symmetry_off_boundary(x):
    assert classify(-x) == mirror_state(classify(x)) or x in (1.0, 2.0, 5.0)


def test_build_sequence_and_counts():
    prices = [100.0, 100.0, 101.5, 100.0, 94.0, 94.0]
    seq = build_sequence(prices, key=("AMZN",))
    assert seq.states.tolist() == [4, 6, 2, 0, 4]
    assert seq.letters() == "EGCAE"
    c = count_transitions(seq)
    assert c.total == 4 and c.n[4, 6] == 1 and c.n[0, 4] == 1
    assert state_histogram(seq).sum() == 5
    assert len(build_sequence([1.0])) == 0


@given(st.lists(st.integers(0, N_STATES - 1), max_size=200))
def test_counts_total_and_letters_round_trip(states):
    s = np.array(states, dtype=np.int8)
    c = count_transitions(s)
    assert c.total == max(len(states) - 1, 0)
    if len(states) > 1:
        # row sums count departures, column sums arrivals
        assert np.array_equal(c.n.sum(1), np.bincount(s[:-1], minlength=N_STATES))
        assert np.array_equal(c.n.sum(0), np.bincount(s[1:], minlength=N_STATES))
    assert decode_letters(encode_letters(s)).tolist() == list(states)


def test_counts_add():
    a = TransitionCounts.zeros()
    b = count_transitions([0, 1, 0])
    assert a + b == b and (b + b).total == 4
