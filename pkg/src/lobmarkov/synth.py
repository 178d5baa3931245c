"""Synthetic tick files from planted transition matrices.

A planted model assigns one 9x9 TPM to every (tier, interval, side) cell.
For each (ticker, day, side, interval) a state path is drawn from the
cell's chain, each state is turned into a percent change drawn uniformly
inside its band, and the resulting price path is written as ADD rows in the
8-column tick format, mixed with non-ADD, off-session and off-universe rows
that ingestion has to discard.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .chainbuilder import N_STATES, classify
from .dtmc import Tpm, simulate, stationary
from .tickstore import (
    DEFAULT_INTERVALS,
    DEFAULT_TIER_MAP,
    DEFAULT_TRADING_DAYS,
    FEED_END_MS,
    FEED_START_MS,
    Interval,
    Side,
    format_time_ms,
)

__all__ = [
    "planted_tpm",
    "PlantedModel",
    "u_shape_model",
    "small_model",
    "sample_change",
    "price_path",
    "write_fixture",
]

# Relative transition weights from each state; mirrored for S6..S9.
_BASE_ROWS = {
    0: [0.10, 0.08, 0.10, 0.25, 0.20, 0.20, 0.02, 0.02, 0.03],
    1: [0.03, 0.10, 0.12, 0.30, 0.25, 0.17, 0.01, 0.01, 0.01],
    2: [0.01, 0.02, 0.10, 0.35, 0.30, 0.20, 0.01, 0.005, 0.005],
    3: [0.003, 0.004, 0.015, 0.20, 0.55, 0.21, 0.012, 0.003, 0.003],
}
# Split of the non-self mass leaving the neutral state.
_NEUTRAL_EXIT = [0.005, 0.005, 0.02, 0.47, 0.0, 0.47, 0.02, 0.005, 0.005]
_TAIL = np.array([1, 1, 1, 0, 0, 0, 1, 1, 1], dtype=bool)

# Uniform sampling bands (percent) per state; open ends are capped at 10%.
_SAMPLE_BANDS = (
    (-10.0, -5.0), (-5.0, -2.0), (-2.0, -1.0), (-1.0, -0.01), (0.0, 0.0),
    (0.01, 1.0), (1.0, 2.0), (2.0, 5.0), (5.0, 10.0),
)


def planted_tpm(p55: float, tail: float = 1.0, mild_self: float = 1.0) -> np.ndarray:
    """Nine-state TPM with neutral self-transition ``p55``.

    ``tail`` scales the weight of moves into the six non-mild states and
    ``mild_self`` the S4->S4 / S6->S6 persistence.
    """
    if not 0 <= p55 < 1:
        raise ValueError("p55 must be in [0, 1)")
    p = np.zeros((N_STATES, N_STATES))
    for i, w in _BASE_ROWS.items():
        row = np.array(w, dtype=float)
        row[_TAIL] *= tail
        row[i] *= mild_self if i == 3 else 1.0
        p[i] = row / row.sum()
        p[N_STATES - 1 - i] = p[i][::-1]
    exit_w = np.array(_NEUTRAL_EXIT)
    exit_w[_TAIL] *= tail
    p[4] = (1.0 - p55) * exit_w / exit_w.sum()
    p[4, 4] = p55
    return p


CellKey = Tuple[str, str, str]  # (tier, interval, side value)


@dataclass
class PlantedModel:
    tpms: Dict[CellKey, np.ndarray]
    description: str = ""
    meta: Dict[str, object] = field(default_factory=dict)

    def p55_profile(self, tier: str, side: str, intervals: Sequence[str]) -> List[float]:
        return [float(self.tpms[(tier, iv, side)][4, 4]) for iv in intervals]

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "meta": self.meta,
            "cells": [
                {"tier": t, "interval": i, "side": s, "p": self.tpms[(t, i, s)].tolist()}
                for (t, i, s) in sorted(self.tpms)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedModel":
        tpms = {(c["tier"], c["interval"], c["side"]): np.array(c["p"]) for c in d["cells"]}
        return cls(tpms, d.get("description", ""), d.get("meta", {}))


U_PROFILE = (0.62, 0.50, 0.46, 0.47, 0.52, 0.66)
TIER_OFFSET = {"HMC": 0.0, "MMC": -0.07, "LMC": -0.14}
TIER_TAIL = {"HMC": 1.0, "MMC": 1.3, "LMC": 1.8}


def u_shape_model(intervals: Sequence[Interval] = DEFAULT_INTERVALS) -> PlantedModel:
    """Neutral inertia high at the open and close, low midday, and ordered
    HMC > MMC > LMC in every interval."""
    if len(intervals) != len(U_PROFILE):
        raise ValueError("the U-shaped profile is defined for six intervals")
    tpms = {}
    for tier, off in TIER_OFFSET.items():
        for iv, base in zip(intervals, U_PROFILE):
            for side, bump in ((Side.ASK.value, 0.0), (Side.BID.value, -0.01)):
                tpms[(tier, iv.name, side)] = planted_tpm(base + off + bump, tail=TIER_TAIL[tier])
    return PlantedModel(tpms, "u-shaped neutral inertia with tier gradient",
                        {"profile": list(U_PROFILE), "tier_offset": TIER_OFFSET})


def small_model(intervals: Sequence[Interval] = DEFAULT_INTERVALS) -> PlantedModel:
    """Same shape as :func:`u_shape_model` with heavier tails, so that short
    runs still visit every state."""
    model = u_shape_model(intervals)
    for (tier, iv, side), p in list(model.tpms.items()):
        model.tpms[(tier, iv, side)] = planted_tpm(p[4, 4], tail=4.0 * TIER_TAIL[tier])
    model.description = "u-shaped profile, heavy tails (small fixture)"
    return model


def sample_change(state: int, rng: np.random.Generator) -> float:
    lo, hi = _SAMPLE_BANDS[state]
    if state == 4:
        return 0.0
    return float(rng.uniform(lo, hi))


def price_path(states: Sequence[int], start: float, rng: np.random.Generator, decimals: int = 2,
               max_tries: int = 50) -> List[str]:
    """Price strings whose consecutive percent changes classify to ``states``.

    Prices are rounded to ``decimals``; a draw whose rounded price lands in
    the wrong band is redrawn, and after ``max_tries`` failures the price is
    written with four more decimals.
    """
    out = [f"{start:.{decimals}f}"]
    prev = float(out[0])
    for s in states:
        s = int(s)
        for _ in range(max_tries):
            txt = f"{prev * (1.0 + sample_change(s, rng) / 100.0):.{decimals}f}"
            cur = float(txt)
            if cur > 0 and classify(100.0 * (cur - prev) / prev) == s:
                break
        else:
            d = decimals + 4
            txt = f"{prev * (1.0 + sample_change(s, rng) / 100.0):.{d}f}"
            cur = float(txt)
            if classify(100.0 * (cur - prev) / prev) != s:
                raise RuntimeError(f"cannot realise state S{s + 1} from price {prev}")
        out.append(txt)
        prev = cur
    return out


_NOISE_TYPES = ("FILL-BID", "FILL-ASK", "DELETE-BID", "DELETE-ASK", "CANCEL-BID", "EXECUTE-ASK")


def write_fixture(
    out_dir,
    model: PlantedModel,
    tier_map: Optional[Dict[str, str]] = None,
    days: Sequence[str] = DEFAULT_TRADING_DAYS,
    intervals: Sequence[Interval] = DEFAULT_INTERVALS,
    events_per_run: int = 500,
    seed: int = 0,
    noise_fraction: float = 0.08,
    foreign_ticker: str = "XLF",
) -> List[Path]:
    """Write one CSV per trading day; returns the file paths.

    Every file is sorted by (timestamp, order id), which is how feed files
    arrive.  Order ids increase along each run so ties at a millisecond keep
    chain order.
    """
    tier_map = dict(DEFAULT_TIER_MAP if tier_map is None else tier_map)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(seed)
    day_seeds = root.spawn(len(days))
    stat_cache: Dict[CellKey, np.ndarray] = {}
    paths = []
    for d_idx, day in enumerate(days):
        rng = np.random.default_rng(day_seeds[d_idx])
        rows: List[Tuple[int, int, str, str, str, str]] = []  # (t, seq, etype, ticker, price, qty)
        seq = 0
        for ticker in sorted(tier_map):
            tier = tier_map[ticker]
            for side in (Side.ASK, Side.BID):
                price = float(rng.uniform(40.0, 400.0))
                etype = side.event_type.value
                # pre-market quotes, ignored by the in-session analysis
                for t in np.sort(rng.integers(FEED_START_MS, intervals[0].start_ms, 5)):
                    rows.append((int(t), seq, etype, ticker, f"{price:.2f}", "100"))
                    seq += 1
                for iv in intervals:
                    key = (tier, iv.name, side.value)
                    p = model.tpms[key]
                    if key not in stat_cache:
                        stat_cache[key] = stationary(Tpm(p)).pi
                    states = simulate(p, stat_cache[key], events_per_run - 1, rng=rng).states
                    prices = price_path(states, price, rng)
                    times = np.sort(rng.integers(iv.start_ms, iv.end_ms + 1, events_per_run))
                    qty = rng.integers(1, 50, events_per_run) * 100
                    for t, px, q in zip(times.tolist(), prices, qty.tolist()):
                        rows.append((t, seq, etype, ticker, px, str(q)))
                        seq += 1
                    price = float(prices[-1])
                for t in np.sort(rng.integers(intervals[-1].end_ms + 1, FEED_END_MS + 1, 5)):
                    rows.append((int(t), seq, etype, ticker, f"{price:.2f}", "100"))
                    seq += 1
        n_noise = int(noise_fraction * len(rows))
        tickers = sorted(tier_map) + [foreign_ticker]
        t_noise = rng.integers(FEED_START_MS, FEED_END_MS + 1, n_noise).tolist()
        k_noise = rng.integers(0, len(_NOISE_TYPES), n_noise).tolist()
        tk_noise = rng.integers(0, len(tickers), n_noise).tolist()
        for t, k, tk in zip(t_noise, k_noise, tk_noise):
            rows.append((t, seq, _NOISE_TYPES[k], tickers[tk], "0", "100"))
            seq += 1
        # foreign-ticker ADDs inside the session
        for t in rng.integers(intervals[0].start_ms, intervals[-1].end_ms, 50).tolist():
            rows.append((t, seq, "ADD-ASK", foreign_ticker, "25.00", "100"))
            seq += 1
        rows.sort(key=lambda r: (r[0], r[1]))
        path = out / f"ticks_{day}.csv"
        base_id = 10_000 + 1_000_000 * d_idx
        with open(path, "w", newline="") as fh:
            for oid, (t, _, etype, ticker, px, q) in enumerate(rows, start=base_id):
                # feed timestamps drop the leading zero of the hour
                ts = format_time_ms(t)
                if ts[0] == "0":
                    ts = ts[1:]
                fh.write(f"{day},{ts},{oid},{etype},{ticker},{px},{q},NASDAQ\n")
        paths.append(path)
    return paths


def write_planted(path, model: PlantedModel) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_planted(path) -> PlantedModel:
    with open(os.fspath(path)) as fh:
        return PlantedModel.from_dict(json.load(fh))
