"""
Permutation importance and proximity
====================================

Shuffling a feature among the out-of-bag objects of each member shows how
much that member relied on it. Proximity counts how often two objects land
in the same terminal region.
"""

import numpy as np

from _data import blobs
from grf import ForestConfig, permutation_importance, proximity, train_forest

data = blobs(2, n=300, informative=2, noise=6, shift=2.5)
f = train_forest(data, ForestConfig(members=100, seed=2))

rep = permutation_importance(f, data, seed=2)
for name, m, s in zip(rep.features, rep.mean, rep.std):
    print(f"{name:4s} {m:+.4f} +- {s:.4f}")
print("ranking:", rep.ranking()[:3])

P = proximity(f, data)
same = data.y[:, None] == data.y[None, :]
off = ~np.eye(data.n_objects, dtype=bool)
print(f"mean proximity within class {P[same & off].mean():.3f}, across {P[~same].mean():.3f}")

# 1 - proximity is a dissimilarity usable for clustering or outlier scores
outlier = (1 - P).mean(axis=1)
print("most isolated objects:", np.argsort(outlier)[-5:])
