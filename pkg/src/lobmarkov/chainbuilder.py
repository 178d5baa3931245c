"""Price runs to nine-state price-change sequences and transition counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "N_STATES",
    "STATE_NAMES",
    "STATE_LABELS",
    "STATE_BANDS",
    "ZERO_TOL",
    "pct_change",
    "classify",
    "classify_array",
    "build_sequence",
    "StateSequence",
    "TransitionCounts",
    "count_transitions",
    "state_histogram",
    "mirror_state",
    "encode_letters",
    "decode_letters",
]

N_STATES = 9
STATE_NAMES = tuple(f"S{i}" for i in range(1, N_STATES + 1))
STATE_LABELS = (
    "A: Very Aggressive Sell",
    "B: Aggressive Sell",
    "C: Moderate Sell",
    "D: Mild Sell",
    "E: Neutral",
    "F: Mild Buy",
    "G: Moderate Buy",
    "H: Aggressive Buy",
    "I: Very Aggressive Buy",
)
LETTERS = "ABCDEFGHI"

# Absolute tolerance (in percent) under which a change counts as zero.
ZERO_TOL = 1e-9

# (low, high) percent bounds per state index 0..8; see classify() for closure.
STATE_BANDS: Tuple[Tuple[float, float], ...] = (
    (-math.inf, -5.0),
    (-5.0, -2.0),
    (-2.0, -1.0),
    (-1.0, 0.0),
    (0.0, 0.0),
    (0.0, 1.0),
    (1.0, 2.0),
    (2.0, 5.0),
    (5.0, math.inf),
)

_NEG_EDGES = np.array([-5.0, -2.0, -1.0])
_POS_EDGES = np.array([1.0, 2.0, 5.0])


def pct_change(prev_price: float, curr_price: float) -> float:
    """Percent change ``100 * (curr - prev) / prev``."""
    if not prev_price > 0:
        raise ValueError(f"previous price must be positive, got {prev_price!r}")
    return 100.0 * (curr_price - prev_price) / prev_price


def classify(change: float) -> int:
    """Map a percent change to a state index 0..8 (S1..S9).

    Negative bands are closed on the left, positive bands on the right, so
    the partition of the real line is total::

        S1 (-inf, -5)   S2 [-5, -2)   S3 [-2, -1)   S4 [-1, 0)
        S5 |x| <= 1e-9
        S6 (0, 1]       S7 (1, 2]     S8 (2, 5]     S9 (5, inf)
    """
    if not math.isfinite(change):
        raise ValueError(f"price change must be finite, got {change!r}")
    if abs(change) <= ZERO_TOL:
        return 4
    if change < 0:
        if change < -5.0:
            return 0
        if change < -2.0:
            return 1
        if change < -1.0:
            return 2
        return 3
    if change <= 1.0:
        return 5
    if change <= 2.0:
        return 6
    if change <= 5.0:
        return 7
    return 8


def classify_array(changes) -> np.ndarray:
    """Vectorised :func:`classify`; returns int8 state indices."""
    x = np.asarray(changes, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("price changes must be finite")
    neg = np.searchsorted(_NEG_EDGES, x, side="right")  # 0..3 -> S1..S4
    pos = 5 + np.searchsorted(_POS_EDGES, x, side="left")  # 5..8 -> S6..S9
    out = np.where(x < 0, neg, pos)
    out[np.abs(x) <= ZERO_TOL] = 4
    return out.astype(np.int8)


def mirror_state(state: int) -> int:
    return N_STATES - 1 - state


@dataclass(frozen=True)
class StateSequence:
    """States of one run; ``key`` is ``(ticker, day, side, interval, tier)``."""

    states: np.ndarray
    key: Optional[tuple] = None

    def __len__(self) -> int:
        return len(self.states)

    def letters(self) -> str:
        return encode_letters(self.states)


def build_sequence(prices: Sequence[float], key: Optional[tuple] = None) -> StateSequence:
    """Classify consecutive percent changes of an ordered price run.

    A run of fewer than two prices gives an empty sequence.
    """
    p = np.asarray(prices, dtype=float)
    if p.size < 2:
        return StateSequence(np.zeros(0, dtype=np.int8), key)
    if np.any(p[:-1] <= 0):
        raise ValueError("prices must be positive")
    changes = 100.0 * (p[1:] - p[:-1]) / p[:-1]
    return StateSequence(classify_array(changes), key)


@dataclass
class TransitionCounts:
    """9x9 transition count matrix; ``n[i, j]`` counts ``S_{i+1} -> S_{j+1}``."""

    n: np.ndarray

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64)
        if self.n.shape != (N_STATES, N_STATES):
            raise ValueError(f"counts must be {N_STATES}x{N_STATES}, got {self.n.shape}")
        if np.any(self.n < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def zeros(cls) -> "TransitionCounts":
        return cls(np.zeros((N_STATES, N_STATES), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.n.sum())

    def __add__(self, other: "TransitionCounts") -> "TransitionCounts":
        return TransitionCounts(self.n + other.n)

    def __eq__(self, other) -> bool:
        return isinstance(other, TransitionCounts) and np.array_equal(self.n, other.n)


def count_transitions(seq) -> TransitionCounts:
    """Count adjacent state pairs within one sequence."""
    s = np.asarray(getattr(seq, "states", seq), dtype=np.int64)
    n = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    if s.size >= 2:
        np.add.at(n, (s[:-1], s[1:]), 1)
    return TransitionCounts(n)


def state_histogram(seq) -> np.ndarray:
    s = np.asarray(getattr(seq, "states", seq), dtype=np.int64)
    return np.bincount(s, minlength=N_STATES).astype(np.int64)


def encode_letters(states: Iterable[int]) -> str:
    return "".join(LETTERS[int(s)] for s in states)


def decode_letters(text: str) -> np.ndarray:
    return np.array([LETTERS.index(c) for c in text.strip()], dtype=np.int8)
