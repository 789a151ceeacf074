"""Synthetic data shared by the demo scripts."""

import numpy as np

from grf import InformationSystem
from grf.dataset import FeatureSchema


def blobs(seed, n=300, informative=2, noise=8, shift=2.5):
    """Two Gaussian classes whose means differ by ``shift`` on the first ``informative`` features."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.normal(size=(n, informative + noise))
    X[:, :informative] += np.where(y == 1, shift, -shift)[:, None] / 2
    schema = tuple(FeatureSchema(f"x{j}", "continuous") for j in range(informative + noise))
    return InformationSystem(schema, X, y, ("neg", "pos"))


def halves(data, first):
    rows = [slice(None, first), slice(first, None)]
    return [InformationSystem(data.schema, data.X[r], data.y[r], data.classes) for r in rows]
