"""Kullback-Leibler and Jensen-Shannon divergences between stationary
distributions (base 2 by default)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

__all__ = ["kld", "jsd", "jsd_matrix", "JsdMatrix", "check_distribution"]

DIST_TOL = 1e-12


def check_distribution(p, name: str = "distribution", tol: float = DIST_TOL) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    if abs(a.sum() - 1.0) > tol:
        raise ValueError(f"{name} must sum to 1 (got {a.sum()!r})")
    return a


def _kld(u: np.ndarray, v: np.ndarray, base: float) -> float:
    mask = u > 0
    if np.any(v[mask] == 0):
        return math.inf
    val = float(np.sum(u[mask] * np.log(u[mask] / v[mask]))) / math.log(base)
    return max(val, 0.0)


def kld(u, v, base: float = 2.0) -> float:
    """``sum u_i log(u_i / v_i)``; ``inf`` when ``u`` is not absolutely
    continuous with respect to ``v``."""
    u = check_distribution(u, "u")
    v = check_distribution(v, "v")
    if u.shape != v.shape:
        raise ValueError("distributions must have the same length")
    return _kld(u, v, base)


def jsd(p, q, base: float = 2.0) -> float:
    """Jensen-Shannon divergence, ``(KL(p||m) + KL(q||m)) / 2`` with ``m = (p+q)/2``.

    The arguments are put in a canonical order first, so ``jsd(p, q)`` and
    ``jsd(q, p)`` run the exact same floating-point operations.
    """
    p = check_distribution(p, "p")
    q = check_distribution(q, "q")
    if p.shape != q.shape:
        raise ValueError("distributions must have the same length")
    if tuple(q) < tuple(p):
        p, q = q, p
    m = 0.5 * (p + q)
    val = 0.5 * (_kld(p, m, base) + _kld(q, m, base))
    return max(val, 0.0)


@dataclass(frozen=True)
class JsdMatrix:
    keys: List[str]
    values: np.ndarray

    def to_rows(self, decimals: int = 4) -> List[List[str]]:
        out = [[""] + list(self.keys)]
        for k, row in zip(self.keys, self.values):
            out.append([k] + [f"{v:.{decimals}f}" for v in row])
        return out


def jsd_matrix(dists: Sequence, keys: Sequence[str] = None, base: float = 2.0) -> JsdMatrix:
    """Pairwise JSD between distributions, symmetric with zero diagonal."""
    if len(dists) < 2:
        raise ValueError("need at least two distributions")
    if keys is None:
        keys = [f"T{i + 1}" for i in range(len(dists))]
    if len(keys) != len(dists):
        raise ValueError("keys and distributions differ in length")
    k = len(dists)
    vals = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            vals[a, b] = vals[b, a] = jsd(dists[a], dists[b], base)
    return JsdMatrix(list(keys), vals)
