"""Transition matrix estimation, pooling, chain structure, stationary
distributions and simulation for the nine-state chain."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .chainbuilder import N_STATES, STATE_NAMES, StateSequence, TransitionCounts

__all__ = [
    "Tpm",
    "StationaryDist",
    "ChainStructure",
    "ReducibleChainError",
    "estimate_tpm",
    "pool_counts",
    "average_tpms",
    "chain_structure",
    "stationary",
    "simulate",
]


class ReducibleChainError(ValueError):
    """The chain has no unique supported closed class."""

    def __init__(self, message: str, classes: Sequence[Sequence[int]] = ()):
        super().__init__(message)
        self.classes = [list(c) for c in classes]


@dataclass
class Tpm:
    """Row-stochastic transition matrix with per-row support flags.

    Rows without observations are self-loops with ``support[i] = False``.
    """

    p: np.ndarray
    support: Optional[np.ndarray] = None
    provenance: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {p.shape}")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("transition matrix rows must sum to 1")
        self.p = p
        if self.support is None:
            self.support = np.ones(p.shape[0], dtype=bool)
        else:
            self.support = np.asarray(self.support, dtype=bool)

    @property
    def size(self) -> int:
        return self.p.shape[0]

    @property
    def degenerate_rows(self) -> List[int]:
        return [int(i) for i in np.flatnonzero(~self.support)]


def estimate_tpm(counts, smoothing: float = 0.0, provenance: Optional[dict] = None) -> Tpm:
    """Maximum-likelihood transition matrix ``p_ij = n_ij / sum_k n_ik``.

    Parameters
    ----------
    counts : TransitionCounts or array_like
    smoothing : float
        Additive pseudo-count applied to every cell before normalising
        (0 disables it).  With ``smoothing > 0`` every row is supported.
    """
    n = np.asarray(getattr(counts, "n", counts), dtype=float)
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    if smoothing:
        n = n + smoothing
    totals = n.sum(axis=1)
    support = totals > 0
    p = np.zeros_like(n)
    p[support] = n[support] / totals[support, None]
    # exact row sums: put the rounding residue on the largest entry of each row
    for i in np.flatnonzero(support):
        j = int(np.argmax(p[i]))
        p[i, j] += 1.0 - p[i].sum()
    idx = np.flatnonzero(~support)
    p[idx, idx] = 1.0
    prov = dict(provenance or {})
    prov.setdefault("smoothing", smoothing)
    return Tpm(p, support, prov)


def pool_counts(counts: Sequence) -> TransitionCounts:
    """Element-wise sum of transition count matrices."""
    total = np.zeros((N_STATES, N_STATES), dtype=np.int64)
    for c in counts:
        total += np.asarray(getattr(c, "n", c), dtype=np.int64)
    return TransitionCounts(total)


def average_tpms(tpms: Sequence[Tpm]) -> Tpm:
    """Unweighted mean of transition matrices over their supported rows.

    A row is averaged only over the matrices in which it is supported; rows
    supported nowhere stay degenerate self-loops.
    """
    if not tpms:
        raise ValueError("nothing to average")
    k = tpms[0].size
    acc = np.zeros((k, k))
    hits = np.zeros(k)
    for t in tpms:
        acc[t.support] += t.p[t.support]
        hits += t.support
    support = hits > 0
    p = np.eye(k)
    p[support] = acc[support] / hits[support, None]
    return Tpm(p, support, {"aggregation": "averaged"})


@dataclass(frozen=True)
class ChainStructure:
    classes: List[List[int]]
    closed_classes: List[List[int]]
    unsupported: List[int]

    @property
    def is_irreducible(self) -> bool:
        return len(self.classes) == 1

    @property
    def supported_closed_classes(self) -> List[List[int]]:
        """Closed classes, minus unsupported self-loop singletons."""
        skip = set(self.unsupported)
        return [c for c in self.closed_classes if not (len(c) == 1 and c[0] in skip)]


def chain_structure(tpm: Tpm) -> ChainStructure:
    """Communicating classes of the graph with an edge ``i -> j`` iff ``p_ij > 0``."""
    adj = (tpm.p > 0).astype(np.int8)
    _, labels = connected_components(adj, directed=True, connection="strong")
    groups: Dict[int, List[int]] = {}
    for state, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(state)
    classes = sorted(groups.values(), key=lambda c: c[0])
    closed = []
    for c in classes:
        inside = np.zeros(tpm.size, dtype=bool)
        inside[c] = True
        if not np.any(adj[np.ix_(inside, ~inside)]):
            closed.append(c)
    return ChainStructure(classes, closed, tpm.degenerate_rows)


@dataclass(frozen=True)
class StationaryDist:
    pi: np.ndarray
    residual: float
    support_class: Tuple[int, ...]


def _solve_balance(p: np.ndarray) -> np.ndarray:
    k = p.shape[0]
    a = p.T - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    return pi


def stationary(tpm: Tpm, refine: int = 2) -> StationaryDist:
    """Stationary distribution of the unique supported closed class.

    Solves ``pi^T (P - I) = 0`` with one balance equation replaced by the
    normalisation row, on the closed class only; other states get zero mass.

    Raises
    ------
    ReducibleChainError
        When there is no supported closed class, or several of them.
    """
    st = chain_structure(tpm)
    closed = st.supported_closed_classes
    if len(closed) != 1:
        names = [[STATE_NAMES[i] if tpm.size == N_STATES else str(i) for i in c] for c in closed]
        if not closed:
            raise ReducibleChainError("no supported closed class; consider smoothing", closed)
        raise ReducibleChainError(f"multiple closed classes {names}; stationary distribution is not unique", closed)
    cls = closed[0]
    sub = tpm.p[np.ix_(cls, cls)]
    pi_c = _solve_balance(sub)
    for _ in range(refine):
        # one step of iterative refinement against the full balance residual
        r = pi_c @ sub - pi_c
        a = sub.T - np.eye(len(cls))
        a[-1, :] = 1.0
        rhs = -r
        rhs[-1] = 1.0 - pi_c.sum()
        pi_c = pi_c + np.linalg.solve(a, rhs)
    pi_c = np.clip(pi_c, 0.0, None)
    pi_c /= pi_c.sum()
    pi = np.zeros(tpm.size)
    pi[cls] = pi_c
    residual = float(np.max(np.abs(pi @ tpm.p - pi)))
    return StationaryDist(pi, residual, tuple(cls))


def simulate(tpm, initial_dist, n_steps: int, seed=None, rng: Optional[np.random.Generator] = None) -> StateSequence:
    """Sample ``n_steps`` states of the chain (first state drawn from
    ``initial_dist``).  Reproducible for a fixed seed."""
    p = np.asarray(getattr(tpm, "p", tpm), dtype=float)
    k = p.shape[0]
    init = np.asarray(initial_dist, dtype=float)
    if init.shape != (k,) or np.any(init < 0) or abs(init.sum() - 1) > 1e-9:
        raise ValueError("initial_dist must be a probability vector")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if rng is None:
        rng = np.random.default_rng(seed)
    if n_steps == 0:
        return StateSequence(np.zeros(0, dtype=np.int8))
    cdf = np.cumsum(p, axis=1)
    cdf[:, -1] = 1.0
    rows = [row.tolist() for row in cdf]
    u = rng.random(n_steps).tolist()
    icdf = np.cumsum(init)
    icdf[-1] = 1.0
    s = bisect_right(icdf.tolist(), u[0])
    states = [s]
    append = states.append
    for t in range(1, n_steps):
        s = bisect_right(rows[s], u[t])
        append(s)
    return StateSequence(np.array(states, dtype=np.int8))
