"""G-test of independence on transition tables, and autocorrelation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy import special

__all__ = [
    "GTestResult",
    "AcfResult",
    "expected_counts",
    "g_statistic",
    "chi2_sf",
    "g_test",
    "acf",
    "AcfAccumulator",
    "average_g_tests",
]

ALPHA = 0.05


def expected_counts(observed) -> np.ndarray:
    """Expected cell counts under independence of rows and columns.

    ``E[i, j] = row_i * col_j / total``.
    """
    o = np.asarray(observed, dtype=float)
    total = o.sum()
    if not total > 0:
        raise ValueError("contingency table has no observations")
    return np.outer(o.sum(axis=1), o.sum(axis=0)) / total


def g_statistic(observed) -> float:
    """Likelihood-ratio statistic ``2 * sum O ln(O / E)``; empty cells add 0."""
    o = np.asarray(observed, dtype=float)
    e = expected_counts(o)
    mask = o > 0
    g = 2.0 * float(np.sum(o[mask] * np.log(o[mask] / e[mask])))
    # rounding can leave tiny negatives when O == E
    return max(g, 0.0)


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-square distribution, ``Q(df/2, x/2)``."""
    if not (df >= 1 and float(df) == int(df)):
        raise ValueError(f"degrees of freedom must be a positive integer, got {df!r}")
    if x < 0 or math.isnan(x):
        raise ValueError(f"chi-square statistic must be non-negative, got {x!r}")
    if x == 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


@dataclass(frozen=True)
class GTestResult:
    g: float
    df: int
    p_value: float
    dropped_rows: int
    dropped_cols: int
    inconclusive: bool = False

    @property
    def reject(self) -> bool:
        return (not self.inconclusive) and self.p_value < ALPHA

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "df": self.df,
            "p_value": self.p_value,
            "reject": self.reject,
            "inconclusive": self.inconclusive,
            "dropped_rows": self.dropped_rows,
            "dropped_cols": self.dropped_cols,
        }


def g_test(observed) -> GTestResult:
    """G-test of independence between consecutive states.

    All-zero rows and columns are dropped first and the degrees of freedom
    are ``(r' - 1)(c' - 1)`` on the reduced table.  A reduced table smaller
    than 2x2 gives an inconclusive result (``p_value = nan``) rather than an
    exception.
    """
    o = np.asarray(observed, dtype=float)
    if not o.sum() > 0:
        raise ValueError("contingency table has no observations")
    rows = o.sum(axis=1) > 0
    cols = o.sum(axis=0) > 0
    red = o[np.ix_(rows, cols)]
    dropped_r = int(o.shape[0] - rows.sum())
    dropped_c = int(o.shape[1] - cols.sum())
    r, c = red.shape
    if r < 2 or c < 2:
        return GTestResult(0.0, 0, math.nan, dropped_r, dropped_c, inconclusive=True)
    g = g_statistic(red)
    df = (r - 1) * (c - 1)
    return GTestResult(g, df, chi2_sf(g, df), dropped_r, dropped_c)


def average_g_tests(results: Iterable[GTestResult]) -> dict:
    """Mean G, df and p over conclusive results (per-day reporting)."""
    ok = [r for r in results if not r.inconclusive]
    if not ok:
        return {"n_tests": 0, "mean_g": math.nan, "mean_df": math.nan, "mean_p": math.nan,
                "reject_fraction": math.nan}
    return {
        "n_tests": len(ok),
        "mean_g": float(np.mean([r.g for r in ok])),
        "mean_df": float(np.mean([r.df for r in ok])),
        "mean_p": float(np.mean([r.p_value for r in ok])),
        "reject_fraction": float(np.mean([r.reject for r in ok])),
    }


@dataclass(frozen=True)
class AcfResult:
    lags: List[int]
    values: List[float]
    n: int
    constant: bool = False

    @property
    def threshold(self) -> float:
        """The ``1/sqrt(N)`` significance band."""
        return 1.0 / math.sqrt(self.n) if self.n > 0 else math.inf

    @property
    def threshold_95(self) -> float:
        return 1.96 / math.sqrt(self.n) if self.n > 0 else math.inf

    def significant(self, conventional: bool = False) -> List[bool]:
        band = self.threshold_95 if conventional else self.threshold
        return [abs(v) > band for v in self.values]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "lags": list(self.lags),
            "values": list(self.values),
            "threshold": self.threshold,
            "threshold_95": self.threshold_95,
            "constant": self.constant,
        }


def acf(series: Sequence[float], max_lag: int) -> AcfResult:
    """Sample autocorrelation at lags ``1..max_lag``.

    Mean-centred, with lag-0 variance as denominator (both sums divided by
    N).  A constant series is flagged and its values are NaN.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if max_lag < 1 or n <= max_lag + 1:
        raise ValueError(f"need more than max_lag + 1 = {max_lag + 1} points, got {n}")
    d = x - x.mean()
    c0 = float(d @ d)
    lags = list(range(1, max_lag + 1))
    if c0 == 0.0:
        return AcfResult(lags, [math.nan] * max_lag, n, constant=True)
    vals = [float(d[:-k] @ d[k:]) / c0 for k in lags]
    return AcfResult(lags, vals, n)


@dataclass
class AcfAccumulator:
    """Pooled autocorrelation over many independent runs.

    Lagged products are only formed inside a run; the centring mean and the
    lag-0 variance are pooled over all runs.  Raw moments are accumulated so
    runs can be streamed and partial accumulators merged.
    """

    max_lag: int
    n: int = 0
    s1: float = 0.0
    s2: float = 0.0
    prod: np.ndarray = field(default=None)
    head: np.ndarray = field(default=None)
    tail: np.ndarray = field(default=None)
    pairs: np.ndarray = field(default=None)

    def __post_init__(self):
        k = self.max_lag
        for name in ("prod", "head", "tail"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(k))
        if self.pairs is None:
            self.pairs = np.zeros(k, dtype=np.int64)

    def add(self, series) -> None:
        x = np.asarray(series, dtype=float)
        m = x.size
        if m == 0:
            return
        self.n += m
        self.s1 += float(x.sum())
        self.s2 += float(x @ x)
        for k in range(1, min(self.max_lag, m - 1) + 1):
            a, b = x[:-k], x[k:]
            self.prod[k - 1] += float(a @ b)
            self.head[k - 1] += float(a.sum())
            self.tail[k - 1] += float(b.sum())
            self.pairs[k - 1] += m - k

    def merge(self, other: "AcfAccumulator") -> None:
        if other.max_lag != self.max_lag:
            raise ValueError("cannot merge accumulators with different max_lag")
        self.n += other.n
        self.s1 += other.s1
        self.s2 += other.s2
        self.prod += other.prod
        self.head += other.head
        self.tail += other.tail
        self.pairs += other.pairs

    def result(self) -> Optional[AcfResult]:
        lags = list(range(1, self.max_lag + 1))
        if self.n <= self.max_lag + 1:
            return None
        mu = self.s1 / self.n
        c0 = self.s2 - self.n * mu * mu
        if c0 <= 1e-12 * max(self.s2, 1.0):
            return AcfResult(lags, [math.nan] * self.max_lag, self.n, constant=True)
        num = self.prod - mu * (self.head + self.tail) + mu * mu * self.pairs
        return AcfResult(lags, [float(v) for v in num / c0], self.n)

    def to_dict(self) -> dict:
        return {
            "max_lag": self.max_lag, "n": self.n, "s1": self.s1, "s2": self.s2,
            "prod": self.prod.tolist(), "head": self.head.tolist(),
            "tail": self.tail.tolist(), "pairs": self.pairs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AcfAccumulator":
        return cls(
            max_lag=int(d["max_lag"]), n=int(d["n"]), s1=float(d["s1"]), s2=float(d["s2"]),
            prod=np.array(d["prod"], dtype=float), head=np.array(d["head"], dtype=float),
            tail=np.array(d["tail"], dtype=float), pairs=np.array(d["pairs"], dtype=np.int64),
        )
