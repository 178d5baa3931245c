# %% [markdown]
# # Embedding and clustering matrices
#
# Eighteen noisy matrices from three inertia regimes are flattened to 81
# numbers each, reduced with PCA, laid out with t-SNE, and clustered with
# Ward linkage and DBSCAN.

# %%
import numpy as np

from lobmarkov.chainbuilder import count_transitions
from lobmarkov.dtmc import Tpm, estimate_tpm, simulate, stationary
from lobmarkov.geometry import cut_tree, dbscan, default_eps, knn_purity, pca_fit, tsne, vectorize, ward_cluster
from lobmarkov.synth import planted_tpm

rng = np.random.default_rng(0)
regimes = {"open": (0.66, 1.0), "midday": (0.46, 1.0), "close": (0.58, 2.0)}
vectors, names = [], []
for name, (p55, tail) in regimes.items():
    p = planted_tpm(p55, tail=tail)
    pi = stationary(Tpm(p)).pi
    for i in range(6):
        vectors.append(vectorize(estimate_tpm(count_transitions(simulate(p, pi, 100_000, rng=rng)))))
        names.append(name)

model, scores = pca_fit(np.array(vectors), 8)
print("explained:", model.explained_ratio.round(3), "cumulative:", model.explained_ratio.cumsum()[-1].round(3))

# %%
ward = cut_tree(ward_cluster(scores), 3)
eps = default_eps(scores, 3)
db = dbscan(scores, eps, 3)
emb = tsne(scores, perplexity=5, seed=0)
for n, w, d, (x, y) in zip(names, ward, db, emb.points):
    print(f"{n:7s} ward={w} dbscan={d:2d}  ({x:7.2f}, {y:7.2f})")
print("eps", round(eps, 4), "t-SNE 3-NN purity", knn_purity(emb.points, names, 3))
