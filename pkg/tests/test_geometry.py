import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.cluster.hierarchy import cut_tree as scipy_cut_tree, linkage
from sklearn.cluster import DBSCAN
from sklearn.metrics import adjusted_rand_score

from lobmarkov.geometry import (
    cut_tree,
    dbscan,
    default_eps,
    devectorize,
    kdistance,
    knn_purity,
    pca_fit,
    tsne,
    vectorize,
    ward_cluster,
)
from lobmarkov.synth import planted_tpm


def blobs(seed=0, n=6, spread=0.05):
    rng = np.random.default_rng(seed)
    centres = np.array([[0, 0, 0], [3, 0, 0], [0, 3, 1]], dtype=float)
    x = np.vstack([c + spread * rng.normal(size=(n, 3)) for c in centres])
    return x, np.repeat([0, 1, 2], n)


def test_vectorize_round_trip():
    p = planted_tpm(0.5)
    v = vectorize(p)
    assert v.shape == (81,) and np.array_equal(devectorize(v), p)
    assert v[9] == p[1, 0]  # row-major


def test_pca_against_svd():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(18, 81)) @ rng.normal(size=(81, 81)) * 0.1
    model, scores = pca_fit(x, 8)
    u, s, vt = np.linalg.svd(x - x.mean(0), full_matrices=False)
    assert np.allclose(model.explained_variance, s[:8] ** 2 / 17)
    for a, b in zip(model.components, vt[:8]):
        assert np.isclose(abs(a @ b), 1.0)
        assert a[np.argmax(np.abs(a))] > 0
    assert np.allclose(scores, model.transform(x))
    assert np.allclose(model.components @ model.components.T, np.eye(8), atol=1e-12)
    full, _ = pca_fit(x, 17)
    assert np.allclose(full.inverse_transform(full.transform(x)), x)


def test_pca_truncates_to_rank():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.warns(RuntimeWarning):
        model, scores = pca_fit(x, 8)
    assert model.k == 1 and model.explained_ratio[0] == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 12))
def test_ward_matches_scipy(seed, n):
    x = np.random.default_rng(seed).normal(size=(n, 3))
    ours = ward_cluster(x).as_array()
    ref = linkage(x, "ward")
    assert np.allclose(ours[:, 2], ref[:, 2] ** 2, rtol=1e-9)
    assert np.array_equal(ours[:, 3], ref[:, 3])
    for k in (2, 3):
        a = cut_tree(ward_cluster(x), k)
        b = scipy_cut_tree(ref, n_clusters=k).ravel()
        assert adjusted_rand_score(a, b) == 1.0


def test_dendrogram_exports():
    x, _ = blobs()
    d = ward_cluster(x[:4])
    nwk = d.to_newick(list("abcd"))
    assert nwk.endswith(";") and all(c in nwk for c in "abcd")
    js = d.to_dict(list("abcd"))
    assert len(js["merges"]) == 3 and js["merges"][-1]["size"] == 4
    with pytest.raises(ValueError):
        cut_tree(d, 0)


def test_dbscan_matches_sklearn():
    x, _ = blobs(3)
    x = np.vstack([x, [[10, 10, 10]]])
    for eps in (0.1, 0.3, 1.0, 5.0):
        ours = dbscan(x, eps, 3)
        ref = DBSCAN(eps=eps, min_samples=3).fit_predict(x)
        assert np.array_equal(ours == -1, ref == -1)
        assert adjusted_rand_score(ours, ref) == 1.0


def test_dbscan_limits():
    x, _ = blobs(4)
    assert set(dbscan(x, 1e6, 3)) == {0}
    assert -1 not in dbscan(x, 1e-9, 1)
    with pytest.raises(ValueError):
        dbscan(x, 0.0, 3)


def test_two_blobs_plus_outlier():
    x, y = blobs(5)
    x = np.vstack([x[y < 2], [[20.0, 20.0, 20.0]]])
    lab = dbscan(x, default_eps(x, 3), 3)
    assert lab[-1] == -1 and len(set(lab[:-1])) == 2


def test_kdistance_counts_self():
    x = np.array([[0.0], [1.0], [3.0]])
    assert kdistance(x, 1).tolist() == [0.0, 0.0, 0.0]
    assert kdistance(x, 2).tolist() == [1.0, 1.0, 2.0]


def test_tsne_recovers_groups_and_is_deterministic():
    x, y = blobs(6, n=6, spread=0.2)
    a = tsne(x, perplexity=5, seed=1)
    b = tsne(x, perplexity=5, seed=1)
    assert np.array_equal(a.points, b.points)
    assert knn_purity(a.points, y, 3) == 1.0
    assert a.kl_divergence >= 0


def test_tsne_guards():
    with pytest.raises(ValueError):
        tsne(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        tsne(np.random.default_rng(0).normal(size=(10, 2)), perplexity=5)
    flat = tsne(np.ones((8, 3)), perplexity=2)
    assert np.all(flat.points == 0) and flat.kl_divergence == 0.0
