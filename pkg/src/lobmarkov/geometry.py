"""Embedding and clustering of transition matrices.

TPMs are flattened row-major into 81-vectors, reduced with PCA, embedded in
two dimensions with exact t-SNE, and clustered with Ward agglomeration and
DBSCAN.  Everything is deterministic given its inputs (and seed).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .chainbuilder import N_STATES

__all__ = [
    "vectorize",
    "devectorize",
    "PcaModel",
    "pca_fit",
    "Embedding2D",
    "tsne",
    "Dendrogram",
    "ward_cluster",
    "cut_tree",
    "dbscan",
    "kdistance",
    "default_eps",
    "knn_purity",
]


def vectorize(tpm) -> np.ndarray:
    """Row-major flatten: ``v[9*i + j] = p[i, j]`` (0-based)."""
    p = np.asarray(getattr(tpm, "p", tpm), dtype=float)
    return p.reshape(-1).copy()


def devectorize(v, k: int = N_STATES) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(k, k).copy()


# --------------------------------------------------------------------- PCA


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    explained_variance: np.ndarray
    explained_ratio: np.ndarray
    total_variance: float

    @property
    def k(self) -> int:
        return self.components.shape[0]

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components.T

    def inverse_transform(self, scores) -> np.ndarray:
        return np.asarray(scores, dtype=float) @ self.components + self.mean


def pca_fit(vectors, k: int = 8) -> Tuple[PcaModel, np.ndarray]:
    """PCA from the eigendecomposition of the sample covariance.

    Returns the model and the ``(n, k)`` scores.  When ``k`` exceeds the rank
    of the centred data it is truncated (with a warning).  Each component's
    sign is fixed so its largest-magnitude loading is positive.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need at least two vectors")
    n, d = x.shape
    if k < 1:
        raise ValueError("k must be at least 1")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    total = float(evals.sum())
    tol = max(evals[0], 0.0) * max(n, d) * np.finfo(float).eps * 10
    rank = int(np.sum(evals > tol))
    kmax = min(n - 1, d, max(rank, 1))
    if k > kmax:
        warnings.warn(f"PCA k={k} exceeds data rank {kmax}; truncating", RuntimeWarning, stacklevel=2)
        k = kmax
    comps = evecs[:, :k].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    var = evals[:k]
    ratio = var / total if total > 0 else np.zeros(k)
    model = PcaModel(mean, comps, var, ratio, total)
    return model, xc @ comps.T


# ------------------------------------------------------------------- t-SNE


@dataclass(frozen=True)
class Embedding2D:
    points: np.ndarray
    kl_divergence: float
    params: Dict[str, float] = field(default_factory=dict)


def _sq_dists(x: np.ndarray) -> np.ndarray:
    s = np.sum(x * x, axis=1)
    d = s[:, None] + s[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _conditional_p(d2: np.ndarray, perplexity: float, tol: float = 1e-5, max_iter: int = 200) -> np.ndarray:
    """Row-wise Gaussian affinities with bandwidths bisected to the target perplexity."""
    n = d2.shape[0]
    target = math.log(perplexity)
    p = np.zeros((n, n))
    for i in range(n):
        di = np.delete(d2[i], i)
        di = di - di.min()  # shift for stability; cancels on normalisation
        beta, lo, hi = 1.0, 0.0, math.inf
        for _ in range(max_iter):
            w = np.exp(-di * beta)
            sw = w.sum()
            h = math.log(sw) + beta * float(di @ w) / sw
            diff = h - target
            if abs(diff) < tol:
                break
            if diff > 0:
                lo = beta
                beta = beta * 2 if math.isinf(hi) else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = 0.5 * (beta + lo)
        p[i, np.arange(n) != i] = w / sw
    return p


def tsne(
    scores,
    perplexity: float = 5.0,
    iterations: int = 1000,
    learning_rate: float = 10.0,
    seed: int = 0,
    exaggeration: float = 4.0,
    exaggeration_iters: int = 100,
) -> Embedding2D:
    """Exact t-SNE into two dimensions.

    Gradient descent with momentum (0.5 during early exaggeration, 0.8
    after) and per-coordinate adaptive gains.  Bit-reproducible for fixed
    inputs and seed.
    """
    x = np.asarray(scores, dtype=float)
    n = x.shape[0]
    if n < 4:
        raise ValueError("t-SNE needs at least 4 points")
    if not 0 < perplexity < (n - 1) / 3:
        raise ValueError(f"perplexity {perplexity} infeasible for n={n}; need 0 < perplexity < {(n - 1) / 3:.3g}")
    params = {"perplexity": perplexity, "iterations": iterations, "learning_rate": learning_rate,
              "seed": seed, "exaggeration": exaggeration, "exaggeration_iters": exaggeration_iters}
    rng = np.random.default_rng(seed)
    d2 = _sq_dists(x)
    if not np.any(d2 > 0):
        # uniform affinities are matched exactly only by a single point
        return Embedding2D(np.zeros((n, 2)), 0.0, params)
    p = _conditional_p(d2, perplexity)
    p = (p + p.T) / (2.0 * n)
    p = np.maximum(p, 1e-12)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(iterations):
        exag = exaggeration if it < exaggeration_iters else 1.0
        momentum = 0.5 if it < exaggeration_iters else 0.8
        num = 1.0 / (1.0 + _sq_dists(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), 1e-12)
        w = (exag * p - q) * num
        grad = 4.0 * (w.sum(axis=1)[:, None] * y - w @ y)
        same = (grad > 0) == (update > 0)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
    num = 1.0 / (1.0 + _sq_dists(y))
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / num.sum(), 1e-12)
    kl = float(np.sum(p * np.log(p / q)))
    return Embedding2D(y, kl, params)


def knn_purity(points, labels, k: int = 3) -> float:
    """Mean fraction of each point's ``k`` nearest neighbours sharing its label."""
    y = np.asarray(points, dtype=float)
    lab = np.asarray(labels)
    d = _sq_dists(y)
    np.fill_diagonal(d, np.inf)
    nn = np.argsort(d, axis=1, kind="stable")[:, :k]
    return float(np.mean(lab[nn] == lab[:, None]))


# -------------------------------------------------------------------- Ward


@dataclass(frozen=True)
class Dendrogram:
    """Merge list in SciPy linkage convention: leaves are 0..n-1 and the
    cluster formed at step ``s`` gets id ``n + s``."""

    merges: List[Tuple[int, int, float, int]]
    n_leaves: int

    def as_array(self) -> np.ndarray:
        return np.array([[a, b, d, s] for a, b, d, s in self.merges], dtype=float).reshape(-1, 4)

    def to_newick(self, names: Optional[Sequence[str]] = None) -> str:
        n = self.n_leaves
        if names is None:
            names = [str(i) for i in range(n)]
        if n == 1:
            return f"{names[0]};"
        height = {i: 0.0 for i in range(n)}
        children = {}
        for s, (a, b, d, _) in enumerate(self.merges):
            height[n + s] = d
            children[n + s] = (a, b)

        def render(node: int) -> str:
            if node < n:
                return names[node]
            a, b = children[node]
            parts = [f"{render(c)}:{height[node] - height[c]:.6g}" for c in (a, b)]
            return "(" + ",".join(parts) + ")"

        return render(n + len(self.merges) - 1) + ";"

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        return {
            "n_leaves": self.n_leaves,
            "leaves": list(names) if names is not None else list(range(self.n_leaves)),
            "merges": [
                {"a": a, "b": b, "distance": d, "size": s} for a, b, d, s in self.merges
            ],
        }


def ward_cluster(points) -> Dendrogram:
    """Ward agglomeration by the Lance-Williams update on squared distances.

    The reported linkage distance is the Lance-Williams value itself, i.e.
    twice the increase in within-cluster sum of squares (for two singletons,
    their squared Euclidean distance).  Ties go to the lexicographically
    smallest pair of cluster ids.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    d = _sq_dists(x)
    np.fill_diagonal(d, np.inf)
    ids = list(range(n))  # slot -> cluster id
    size = np.ones(n)
    active = np.ones(n, dtype=bool)
    merges = []
    for step in range(n - 1):
        sub = np.where(active[:, None] & active[None, :], d, np.inf)
        m = sub.min()
        ii, jj = np.nonzero(sub == m)
        best = min((min(ids[i], ids[j]), max(ids[i], ids[j]), i, j) for i, j in zip(ii, jj) if i != j)
        a_id, b_id, i, j = best
        i, j = min(i, j), max(i, j)
        ni, nj = size[i], size[j]
        nk = size
        new = ((ni + nk) * d[i] + (nj + nk) * d[j] - nk * m) / (ni + nj + nk)
        d[i, :] = new
        d[:, i] = new
        d[i, i] = np.inf
        active[j] = False
        d[j, :] = np.inf
        d[:, j] = np.inf
        size[i] = ni + nj
        merges.append((a_id, b_id, float(m), int(ni + nj)))
        ids[i] = n + step
    return Dendrogram(merges, n)


def cut_tree(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Flat labels for ``k`` clusters, numbered by first leaf appearance."""
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    parent = list(range(2 * n - 1))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    for s, (a, b, _, _) in enumerate(dendrogram.merges[: n - k]):
        parent[find(a)] = n + s
        parent[find(b)] = n + s
    roots: Dict[int, int] = {}
    out = np.empty(n, dtype=int)
    for leaf in range(n):
        r = find(leaf)
        out[leaf] = roots.setdefault(r, len(roots))
    return out


# ------------------------------------------------------------------ DBSCAN


def kdistance(points, k: int) -> np.ndarray:
    """Distance from each point to its ``k``-th nearest point, counting the
    point itself as the first (so ``eps >= kdistance`` makes it a core point
    for ``min_pts = k``)."""
    x = np.asarray(points, dtype=float)
    d = np.sqrt(_sq_dists(x))
    k = min(k, x.shape[0])
    return np.sort(d, axis=1)[:, k - 1]


def default_eps(points, min_pts: int = 3, jump: float = 2.0) -> float:
    """``eps`` at the elbow of the sorted k-distance curve (k = min_pts).

    The elbow is the largest relative jump between consecutive sorted
    k-distances, provided it exceeds ``jump``; eps is the value just below
    it.  Without such a jump every point sits in comparably dense
    surroundings and eps is the largest k-distance.
    """
    kd = np.sort(kdistance(points, min_pts))
    pos = kd[kd > 0]
    if pos.size == 0:
        return 1e-12
    best, eps = jump, float(pos[-1])
    for lo, hi in zip(pos[:-1], pos[1:]):
        if hi / lo > best:
            best, eps = hi / lo, float(lo)
    return eps


def dbscan(points, eps: float, min_pts: int = 3) -> np.ndarray:
    """Density-based clustering; noise is labelled -1.

    Neighbourhoods are closed balls (distance <= eps) that include the point
    itself.  Clusters are numbered in order of discovery while scanning the
    points in input order; border points reachable from several clusters
    join the first one to reach them.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be at least 1")
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    d = np.sqrt(_sq_dists(x))
    nbrs = [np.flatnonzero(d[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in nbrs])
    labels = np.full(n, -1, dtype=int)
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or not core[i]:
            continue
        labels[i] = cluster
        queue = [i]
        while queue:
            u = queue.pop(0)
            for v in nbrs[u]:
                if labels[v] == -1:
                    labels[v] = cluster
                    if core[v]:
                        queue.append(v)
        cluster += 1
    return labels
