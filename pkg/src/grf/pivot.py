"""Pivot models: single-feature rules sending each object left or right.

Two rule kinds exist. A subset rule on a categorical feature sends an object
right when its category is in the subset; a threshold rule on a continuous
feature sends it right when ``x >= threshold`` (so the boundary goes right).

Pivots are produced by one of three strategies:

* ``optimised``: exhaustive search for the split with the highest gain,
* ``random``: a uniformly drawn split that separates the node,
* ``heuristic``: the best of ``k`` random splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence, Union

import numpy as np

from .dataset import FeatureSchema, InformationSystem
from .errors import ConfigError, ModelFormatError, SchemaError
from .impurity import gain_from_counts, gains_rowwise, get_measure

MAX_EXHAUSTIVE_CATEGORIES = 10
RANDOM_ATTEMPTS = 32
_GAIN_SLACK = 1e-9


class Direction(IntEnum):
    L = 0
    R = 1


class Verdict(IntEnum):
    A = 0
    B = 1
    UNDECIDED = 2


@dataclass(frozen=True)
class ThresholdRule:
    threshold: float

    def key(self):
        return self.threshold


@dataclass(frozen=True)
class SubsetRule:
    subset: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(sorted(int(c) for c in self.subset)))

    def key(self):
        return self.subset


Rule = Union[ThresholdRule, SubsetRule]


@dataclass(frozen=True)
class Pivot:
    feature: int
    rule: Rule

    def goes_right(self, X: np.ndarray) -> np.ndarray:
        """Boolean mask over the rows of ``X``: True where the pivot says R."""
        col = X[:, self.feature]
        if isinstance(self.rule, ThresholdRule):
            return col >= self.rule.threshold
        return np.isin(col.astype(np.int64), self.rule.subset)

    def check(self, schema: Sequence[FeatureSchema]) -> None:
        if not 0 <= self.feature < len(schema):
            raise SchemaError(f"pivot feature {self.feature} out of range")
        f = schema[self.feature]
        if isinstance(self.rule, ThresholdRule):
            if f.is_categorical:
                raise SchemaError(f"threshold rule on categorical feature {f.name!r}")
            if not math.isfinite(self.rule.threshold):
                raise SchemaError("non-finite threshold")
        else:
            if not f.is_categorical:
                raise SchemaError(f"subset rule on continuous feature {f.name!r}")
            s = self.rule.subset
            if not s or len(s) >= len(f.categories) or len(set(s)) != len(s):
                raise SchemaError("subset must be a non-empty proper subset of the categories")
            if s[0] < 0 or s[-1] >= len(f.categories):
                raise SchemaError("subset names an unknown category")

    def complement(self, schema: Sequence[FeatureSchema]) -> "Pivot":
        """Subset pivot with L and R swapped."""
        if not isinstance(self.rule, SubsetRule):
            raise TypeError("only subset rules have a complement")
        n_cat = len(schema[self.feature].categories)
        rest = tuple(c for c in range(n_cat) if c not in self.rule.subset)
        return Pivot(self.feature, SubsetRule(rest))

    def to_dict(self) -> dict:
        if isinstance(self.rule, ThresholdRule):
            return {"feature": self.feature, "threshold": self.rule.threshold}
        return {"feature": self.feature, "subset": list(self.rule.subset)}

    @classmethod
    def from_dict(cls, d) -> "Pivot":
        try:
            if "threshold" in d:
                return cls(int(d["feature"]), ThresholdRule(float(d["threshold"])))
            return cls(int(d["feature"]), SubsetRule(tuple(d["subset"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad pivot payload {d!r}: {exc}") from None


def apply_pivot(p: Pivot, data: InformationSystem, obj: int) -> Direction:
    f = data.schema[p.feature]
    if f.is_categorical != isinstance(p.rule, SubsetRule):
        raise SchemaError(f"pivot rule does not match kind of feature {f.name!r}")
    x = data.X[obj : obj + 1]
    return Direction.R if p.goes_right(x)[0] else Direction.L


@dataclass(frozen=True)
class GenerationStrategy:
    kind: str = "optimised"
    measure: str = "gini"
    k: int = 1
    m_try: int | str = "sqrt"

    def __post_init__(self):
        if self.kind not in ("optimised", "random", "heuristic"):
            raise ConfigError(f"unknown pivot strategy {self.kind!r}")
        if self.k < 1:
            raise ConfigError("heuristic k must be >= 1")
        if isinstance(self.m_try, str):
            if self.m_try not in ("sqrt", "all"):
                raise ConfigError(f"m_try must be a count, 'sqrt' or 'all', got {self.m_try!r}")
        elif self.m_try < 0:
            raise ConfigError("m_try must be non-negative")
        get_measure(self.measure)

    def features_to_try(self, n_features: int) -> int:
        if self.m_try == "all" or self.m_try == 0:
            return n_features
        if self.m_try == "sqrt":
            return math.ceil(math.sqrt(n_features))
        if self.m_try > n_features:
            raise ConfigError(f"m_try={self.m_try} exceeds the {n_features} features")
        return self.m_try

    def to_dict(self) -> dict:
        return {"kind": self.kind, "measure": self.measure, "k": self.k, "m_try": self.m_try}

    @classmethod
    def from_dict(cls, d) -> "GenerationStrategy":
        return cls(d["kind"], d["measure"], int(d["k"]), d["m_try"])


def candidate_features(strategy: GenerationStrategy, n_features: int, rng: np.random.Generator) -> np.ndarray:
    m = strategy.features_to_try(n_features)
    if m >= n_features:
        return np.arange(n_features)
    return np.sort(rng.choice(n_features, size=m, replace=False))


def enumerate_thresholds(data: InformationSystem, subset, feature: int) -> list[float]:
    """Midpoints between consecutive distinct values of a continuous feature."""
    if data.schema[feature].is_categorical:
        raise ValueError("thresholds are only defined for continuous features")
    vals = np.unique(data.X[np.asarray(subset, dtype=np.intp), feature])
    return [float(t) for t in _midpoints(vals[:-1], vals[1:])]


def _midpoints(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    mid = lo + (hi - lo) / 2.0
    # adjacent floats: the midpoint can round onto the lower value
    return np.where(mid > lo, mid, hi)


@dataclass
class _Candidates:
    """Every admissible split of one feature at one node."""

    feature: int
    keys: list  # thresholds or subset tuples
    left: np.ndarray  # (M, K) class counts sent L
    right: np.ndarray  # (M, K) class counts sent R
    categorical: bool

    def pivot(self, i: int) -> Pivot:
        if self.categorical:
            return Pivot(self.feature, SubsetRule(self.keys[i]))
        return Pivot(self.feature, ThresholdRule(float(self.keys[i])))


def _continuous_candidates(x, y, K, feature) -> _Candidates | None:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    cut = np.flatnonzero(xs[:-1] != xs[1:])
    if cut.size == 0:
        return None
    onehot = np.zeros((xs.size, K), dtype=np.int64)
    onehot[np.arange(xs.size), ys] = 1
    prefix = np.cumsum(onehot, axis=0)
    left = prefix[cut]
    right = prefix[-1] - left
    keys = _midpoints(xs[cut], xs[cut + 1]).tolist()
    return _Candidates(feature, keys, left, right, False)


def _categorical_candidates(x, y, K, feature, n_categories, rng) -> _Candidates | None:
    codes = x.astype(np.int64)
    present = np.unique(codes)
    m = present.size
    if m < 2:
        return None
    pos = np.searchsorted(present, codes)
    counts = np.zeros((m, K), dtype=np.int64)
    np.add.at(counts, (pos, y), 1)
    if m <= MAX_EXHAUSTIVE_CATEGORIES:
        # the first present category always stays on the L side
        ids = np.arange(1, 2 ** (m - 1), dtype=np.int64)
        masks = np.zeros((ids.size, m), dtype=bool)
        for j in range(1, m):
            masks[:, j] = (ids >> (j - 1)) & 1
    else:
        masks = rng.random((4 * n_categories, m)) < 0.5
        sizes = masks.sum(axis=1)
        masks = masks[(sizes > 0) & (sizes < m)]
        if masks.shape[0] == 0:
            return None
    right = masks.astype(np.int64) @ counts
    left = counts.sum(axis=0) - right
    keys = [tuple(int(c) for c in present[mk]) for mk in masks]
    return _Candidates(feature, keys, left, right, True)


def _node_candidates(data, rows, feature, rng) -> _Candidates | None:
    x = data.X[rows, feature]
    y = data.y[rows]
    f = data.schema[feature]
    if f.is_categorical:
        return _categorical_candidates(x, y, data.n_classes, feature, len(f.categories), rng)
    return _continuous_candidates(x, y, data.n_classes, feature)


def _best_by_gain(measure, scored: list[tuple[_Candidates, int]]) -> tuple[Pivot, float] | None:
    """Re-score shortlisted splits exactly and apply the deterministic tie-break."""
    best = None
    for cand, i in scored:
        g = gain_from_counts(measure, cand.left[i], cand.right[i])
        key = (-g, cand.feature, cand.keys[i])
        if best is None or key < best[0]:
            best = (key, cand, i, g)
    if best is None:
        return None
    _, cand, i, g = best
    return cand.pivot(i), g


def _optimised(measure, data, rows, features, rng):
    pool = [c for f in features if (c := _node_candidates(data, rows, int(f), rng)) is not None]
    if not pool:
        return None
    m = get_measure(measure)
    approx = [gains_rowwise(m, c.left, c.right) for c in pool]
    top = max(float(a.max()) for a in approx)
    shortlist = [(c, int(i)) for c, a in zip(pool, approx) for i in np.flatnonzero(a >= top - _GAIN_SLACK)]
    return _best_by_gain(m, shortlist)


def _random_pivot(data, rows, features, rng) -> Pivot | None:
    for _ in range(RANDOM_ATTEMPTS):
        f = int(features[rng.integers(len(features))])
        x = data.X[rows, f]
        if data.schema[f].is_categorical:
            present = np.unique(x).astype(np.int64)
            if present.size < 2:
                continue
            mask = rng.random(present.size) < 0.5
            if 0 < mask.sum() < present.size:
                return Pivot(f, SubsetRule(tuple(present[mask])))
        else:
            lo, hi = float(x.min()), float(x.max())
            if lo == hi:
                continue
            t = float(rng.uniform(lo, hi))
            if lo < t <= hi:
                return Pivot(f, ThresholdRule(t))
    return None


def _partition_counts(p: Pivot, data, rows):
    right = p.goes_right(data.X[rows])
    K = data.n_classes
    return (
        np.bincount(data.y[rows][~right], minlength=K),
        np.bincount(data.y[rows][right], minlength=K),
    )


def pivot_gain(measure, p: Pivot, data: InformationSystem, rows) -> float:
    """Split gain of ``p`` over the objects ``rows``."""
    rows = np.asarray(rows, dtype=np.intp)
    lc, rc = _partition_counts(p, data, rows)
    return gain_from_counts(measure, lc, rc)


def generate_pivot(strategy: GenerationStrategy, data: InformationSystem, subset, rng: np.random.Generator) -> Pivot | None:
    """Build one pivot for the objects in ``subset``.

    Returns None when no pivot separates the subset (every candidate feature
    constant, or the random attempt budget ran out).
    """
    rows = np.asarray(subset, dtype=np.intp)
    if rows.size < 2:
        raise ValueError("pivot generation needs at least two objects")
    features = candidate_features(strategy, data.n_features, rng)
    if strategy.kind == "optimised":
        found = _optimised(strategy.measure, data, rows, features, rng)
        return None if found is None else found[0]
    if strategy.kind == "random":
        return _random_pivot(data, rows, features, rng)
    drawn = [p for _ in range(strategy.k) if (p := _random_pivot(data, rows, features, rng)) is not None]
    if not drawn:
        return None
    counts = [_partition_counts(p, data, rows) for p in drawn]
    m = get_measure(strategy.measure)
    approx = gains_rowwise(m, np.array([c[0] for c in counts]), np.array([c[1] for c in counts]))
    best = None
    for i in np.flatnonzero(approx >= approx.max() - _GAIN_SLACK):
        p = drawn[i]
        key = (-gain_from_counts(m, *counts[i]), p.feature, p.rule.key())
        if best is None or key < best[0]:
            best = (key, p)
    return best[1]


# --- ternary segments -------------------------------------------------------


@dataclass(frozen=True)
class TernaryPivot:
    """Two pivots, each aimed at isolating one class in one of its branches.

    ``side_a`` is the branch of ``pivot_a`` that claims class A (likewise for
    B); an object is A when only pivot A claims it, B when only pivot B does,
    and undecided when neither or both do.
    """

    pivot_a: Pivot
    pivot_b: Pivot
    side_a: Direction = Direction.R
    side_b: Direction = Direction.R

    def verdicts(self, X: np.ndarray) -> np.ndarray:
        hit_a = self.pivot_a.goes_right(X) == bool(self.side_a)
        hit_b = self.pivot_b.goes_right(X) == bool(self.side_b)
        out = np.full(X.shape[0], Verdict.UNDECIDED, dtype=np.int64)
        out[hit_a & ~hit_b] = Verdict.A
        out[hit_b & ~hit_a] = Verdict.B
        return out

    def to_dict(self) -> dict:
        return {
            "a": self.pivot_a.to_dict(),
            "b": self.pivot_b.to_dict(),
            "side_a": self.side_a.name,
            "side_b": self.side_b.name,
        }

    @classmethod
    def from_dict(cls, d) -> "TernaryPivot":
        try:
            return cls(Pivot.from_dict(d["a"]), Pivot.from_dict(d["b"]), Direction[d["side_a"]], Direction[d["side_b"]])
        except KeyError as exc:
            raise ModelFormatError(f"bad trunk segment: missing {exc}") from None


def apply_ternary(t: TernaryPivot, data: InformationSystem, obj: int) -> Verdict:
    return Verdict(int(t.verdicts(data.X[obj : obj + 1])[0]))


def one_sided_score(branch_counts: np.ndarray, cls: int) -> np.ndarray:
    """(class objects in branch) x (class purity of branch)^2."""
    bc = np.atleast_2d(branch_counts).astype(np.float64)
    hits = bc[:, cls]
    size = bc.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        purity = np.where(size > 0, hits / size, 0.0)
    return hits * purity**2


def _best_one_sided(pool: list[_Candidates], cls: int):
    best = None
    for c in pool:
        for side, counts in ((Direction.L, c.left), (Direction.R, c.right)):
            s = one_sided_score(counts, cls)
            top = float(s.max())
            for i in np.flatnonzero(s == top):
                key = (-top, c.feature, -int(side), c.keys[int(i)])
                if best is None or key < best[0]:
                    best = (key, c.pivot(int(i)), side)
    return best


def _random_one_sided(data, rows, features, rng, k, cls):
    best = None
    for _ in range(k):
        p = _random_pivot(data, rows, features, rng)
        if p is None:
            continue
        side = Direction(int(rng.integers(2)))
        lc, rc = _partition_counts(p, data, rows)
        score = float(one_sided_score(rc if side == Direction.R else lc, cls)[0])
        key = (-score, p.feature, -int(side), p.rule.key())
        if best is None or key < best[0]:
            best = (key, p, side)
    return best


def generate_ternary(
    data: InformationSystem,
    subset,
    classes: tuple[int, int],
    strategy: GenerationStrategy,
    rng: np.random.Generator,
) -> TernaryPivot | None:
    """Build a trunk segment separating ``classes = (A, B)`` on ``subset``."""
    if data.n_classes != 2:
        raise ConfigError("trunk requires binary decision")
    rows = np.asarray(subset, dtype=np.intp)
    if rows.size < 2:
        raise ValueError("segment generation needs at least two objects")
    a, b = classes
    features = candidate_features(strategy, data.n_features, rng)
    if strategy.kind == "optimised":
        pool = [c for f in features if (c := _node_candidates(data, rows, int(f), rng)) is not None]
        if not pool:
            return None
        best_a, best_b = _best_one_sided(pool, a), _best_one_sided(pool, b)
    else:
        k = strategy.k if strategy.kind == "heuristic" else 1
        best_a = _random_one_sided(data, rows, features, rng, k, a)
        best_b = _random_one_sided(data, rows, features, rng, k, b)
    if best_a is None or best_b is None:
        return None
    return TernaryPivot(best_a[1], best_b[1], best_a[2], best_b[2])
