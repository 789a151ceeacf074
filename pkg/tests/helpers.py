"""Synthetic datasets and independent oracles shared by the test modules."""

import itertools

import numpy as np

from grf import FeatureSchema, InformationSystem, class_distribution, split_gain


def continuous(n_features, prefix="x"):
    return tuple(FeatureSchema(f"{prefix}{j}", "continuous") for j in range(n_features))


def blobs(seed, n=200, informative=2, noise=8, shift=2.5):
    """Two Gaussian blobs separated along the first ``informative`` features."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.normal(size=(n, informative + noise))
    X[:, :informative] += np.where(y == 1, shift, -shift)[:, None] / 2
    return InformationSystem(continuous(informative + noise), X, y, ("neg", "pos"))


def split_rows(data, first):
    """Split an information system into the first ``first`` rows and the rest."""
    a = InformationSystem(data.schema, data.X[:first], data.y[:first], data.classes, data.decision_name)
    b = InformationSystem(data.schema, data.X[first:], data.y[first:], data.classes, data.decision_name)
    return a, b


def mixed_random(rng, n, n_features, n_classes=2, max_categories=4):
    """Random dataset mixing continuous and categorical columns."""
    schema, cols = [], []
    for j in range(n_features):
        if rng.random() < 0.5:
            m = int(rng.integers(2, max_categories + 1))
            schema.append(FeatureSchema(f"c{j}", "categorical", tuple(f"k{i}" for i in range(m))))
            cols.append(rng.integers(0, m, n).astype(float))
        else:
            schema.append(FeatureSchema(f"r{j}", "continuous"))
            # coarse grid so ties are common
            cols.append(np.round(rng.normal(size=n), 1))
    y = rng.integers(0, n_classes, n)
    y[: n_classes] = np.arange(n_classes)
    return InformationSystem(tuple(schema), np.column_stack(cols), y, tuple(f"y{k}" for k in range(n_classes)))


def sparse_signal(seed, n=200, noise=49):
    """One informative feature among ``noise`` uniform distractors."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, noise + 1))
    y = (X[:, 0] > 0).astype(int)
    return InformationSystem(continuous(noise + 1), X, y, ("lo", "hi"))


def brute_force_best_gain(data, rows, measure="gini"):
    """Best split gain by enumerating every partition a pivot can produce.

    Continuous features: every midpoint of consecutive distinct values.
    Categorical features: every subset of the full category set (mirrors
    included). Partitions leaving a side empty are skipped. Returns None when
    no partition exists.
    """
    rows = np.asarray(rows)
    best = None
    for j, f in enumerate(data.schema):
        col = data.X[rows, j]
        if f.is_categorical:
            masks = []
            cats = range(len(f.categories))
            for r in range(1, len(f.categories)):
                for sub in itertools.combinations(cats, r):
                    masks.append(np.isin(col, sub))
        else:
            vals = sorted(set(col.tolist()))
            masks = [col >= (a + b) / 2 for a, b in zip(vals, vals[1:])]
        for right in masks:
            if right.all() or not right.any():
                continue
            g = split_gain(
                measure,
                (class_distribution(data, rows), rows.size),
                (class_distribution(data, rows[~right]), int((~right).sum())),
                (class_distribution(data, rows[right]), int(right.sum())),
            )
            best = g if best is None else max(best, g)
    return best


def _one_split_separates(X, y, features):
    """True when ``y`` is pure or some single threshold on ``features`` makes both sides pure."""
    if y.size == 0 or np.all(y == y[0]):
        return True
    for j in features:
        vals = np.unique(X[:, j])
        for lo, hi in zip(vals[:-1], vals[1:]):
            right = X[:, j] >= lo + (hi - lo) / 2
            if np.all(y[right] == y[right][0]) and np.all(y[~right] == y[~right][0]):
                return True
    return False


def depth_two_separable(data, features=None):
    """Brute force: does some axis-aligned tree of depth <= 2 classify ``data`` with zero error?"""
    X, y = data.X, data.y
    features = range(data.n_features) if features is None else features
    if _one_split_separates(X, y, features):
        return True
    for j in features:
        vals = np.unique(X[:, j])
        for lo, hi in zip(vals[:-1], vals[1:]):
            right = X[:, j] >= lo + (hi - lo) / 2
            if _one_split_separates(X[right], y[right], features) and _one_split_separates(X[~right], y[~right], features):
                return True
    return False
