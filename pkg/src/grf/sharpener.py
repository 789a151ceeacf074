"""Sharpening ensembles: models assembled from pivots.

Every trained model exposes the same small surface, which is all the forest
layer relies on:

``predict_proba(X)``
    ``(n, K)`` class distributions.
``leaf_ids(X)``
    integer id of the terminal region each object lands in.
``to_dict()`` / ``from_dict(d, schema, n_classes)``
    plain-data payload for model files.

A new sharpener (a boosted committee of pivots, say) only needs to provide
these and register a trainer in ``TRAINERS``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .dataset import FeatureSchema, InformationSystem, smoothed_distribution
from .errors import ConfigError, ModelFormatError
from .impurity import DIST_TOL
from .pivot import GenerationStrategy, Pivot, TernaryPivot, Verdict, generate_pivot, generate_ternary

MAX_FERN_DEPTH = 24
KINDS = ("tree", "fern", "trunk", "null")


@dataclass(frozen=True)
class SharpenerConfig:
    kind: str = "tree"
    strategy: GenerationStrategy = field(default_factory=GenerationStrategy)
    max_depth: int = 32
    min_node_size: int = 1
    fern_depth: int = 10
    max_segments: int = 10
    smoothing: float | None = None  # None: 0 for trees, 1 otherwise

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown sharpener {self.kind!r}")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_node_size < 1:
            raise ConfigError("min_node_size must be >= 1")
        if not 1 <= self.fern_depth <= MAX_FERN_DEPTH:
            raise ConfigError(f"fern depth must lie in [1, {MAX_FERN_DEPTH}]")
        if self.max_segments < 1:
            raise ConfigError("max_segments must be >= 1")
        if self.smoothing is not None and self.smoothing < 0:
            raise ConfigError("smoothing must be non-negative")

    @property
    def eps(self) -> float:
        if self.smoothing is not None:
            return float(self.smoothing)
        return 0.0 if self.kind == "tree" else 1.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "strategy": self.strategy.to_dict(),
            "max_depth": self.max_depth,
            "min_node_size": self.min_node_size,
            "fern_depth": self.fern_depth,
            "max_segments": self.max_segments,
            "smoothing": self.smoothing,
        }

    @classmethod
    def from_dict(cls, d) -> "SharpenerConfig":
        d = dict(d)
        d["strategy"] = GenerationStrategy.from_dict(d["strategy"])
        return cls(**d)


def _counts(data: InformationSystem, rows) -> np.ndarray:
    return np.bincount(data.y[rows], minlength=data.n_classes)


def _load_dist(values, n_classes: int) -> np.ndarray:
    d = np.array(values, dtype=np.float64)
    if d.shape != (n_classes,) or np.any(d < 0) or abs(d.sum() - 1.0) > DIST_TOL:
        raise ModelFormatError(f"invalid class distribution {values!r}")
    return d


def _load_pivot(d, schema) -> Pivot:
    p = Pivot.from_dict(d)
    try:
        p.check(schema)
    except Exception as exc:
        raise ModelFormatError(f"invalid pivot: {exc}") from None
    return p


# --- decision tree ----------------------------------------------------------


@dataclass(frozen=True)
class TreeSplit:
    pivot: Pivot
    left: int
    right: int


@dataclass(frozen=True)
class TreeLeaf:
    dist: np.ndarray
    support: int


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Binary tree stored as a flat pre-order node list; node 0 is the root."""

    nodes: tuple
    kind = "tree"

    def leaf_ids(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0], dtype=np.int64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            i, idx = stack.pop()
            node = self.nodes[i]
            if isinstance(node, TreeLeaf):
                out[idx] = i
                continue
            r = node.pivot.goes_right(X[idx])
            stack.append((node.left, idx[~r]))
            stack.append((node.right, idx[r]))
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self._table[self.leaf_ids(X)]

    @cached_property
    def _table(self):
        K = next(n.dist.size for n in self.nodes if isinstance(n, TreeLeaf))
        table = np.zeros((len(self.nodes), K))
        for i, n in enumerate(self.nodes):
            if isinstance(n, TreeLeaf):
                table[i] = n.dist
        return table

    @property
    def depth(self) -> int:
        def d(i):
            n = self.nodes[i]
            return 0 if isinstance(n, TreeLeaf) else 1 + max(d(n.left), d(n.right))

        return d(0)

    @classmethod
    def stump(cls, data: InformationSystem, bag, pivot: Pivot, eps: float = 0.0) -> "TreeModel":
        """Depth-1 tree on a given pivot."""
        rows = np.asarray(bag, dtype=np.intp)
        r = pivot.goes_right(data.X[rows])
        return cls(
            (
                TreeSplit(pivot, 1, 2),
                TreeLeaf(smoothed_distribution(_counts(data, rows[~r]), eps), int((~r).sum())),
                TreeLeaf(smoothed_distribution(_counts(data, rows[r]), eps), int(r.sum())),
            )
        )

    def to_dict(self) -> dict:
        nodes = []
        for n in self.nodes:
            if isinstance(n, TreeLeaf):
                nodes.append({"dist": n.dist.tolist(), "support": n.support})
            else:
                nodes.append({"pivot": n.pivot.to_dict(), "left": n.left, "right": n.right})
        return {"kind": "tree", "nodes": nodes}

    @classmethod
    def from_dict(cls, d, schema, n_classes) -> "TreeModel":
        raw = d.get("nodes")
        if not raw:
            raise ModelFormatError("tree without nodes")
        nodes = []
        for i, n in enumerate(raw):
            if "dist" in n:
                nodes.append(TreeLeaf(_load_dist(n["dist"], n_classes), int(n["support"])))
            else:
                left, right = int(n["left"]), int(n["right"])
                if not (i < left < len(raw) and i < right < len(raw)):
                    raise ModelFormatError("tree child index out of order")
                nodes.append(TreeSplit(_load_pivot(n["pivot"], schema), left, right))
        return cls(tuple(nodes))


def train_tree(data: InformationSystem, bag, cfg: SharpenerConfig, rng: np.random.Generator) -> TreeModel:
    rows = np.asarray(bag, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("empty bag")
    nodes: list = []
    eps = cfg.eps

    def grow(rows, depth):
        counts = _counts(data, rows)
        at = len(nodes)
        nodes.append(None)
        pivot = None
        splittable = (
            np.count_nonzero(counts) > 1
            and rows.size >= cfg.min_node_size
            and rows.size >= 2
            and depth < cfg.max_depth
        )
        if splittable:
            pivot = generate_pivot(cfg.strategy, data, rows, rng)
        if pivot is None:
            nodes[at] = TreeLeaf(smoothed_distribution(counts, eps), int(rows.size))
            return at
        r = pivot.goes_right(data.X[rows])
        left = grow(rows[~r], depth + 1)
        right = grow(rows[r], depth + 1)
        nodes[at] = TreeSplit(pivot, left, right)
        return at

    grow(rows, 0)
    return TreeModel(tuple(nodes))


# --- decision fern ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FernModel:
    """``D`` pivots shared by every node at a depth; ``leaves`` has 2**D rows.

    Pivot ``i`` contributes bit ``i`` of the leaf index (1 when it says R).
    """

    pivots: tuple[Pivot, ...]
    leaves: np.ndarray
    kind = "fern"

    @property
    def depth(self) -> int:
        return len(self.pivots)

    def leaf_ids(self, X: np.ndarray, order: Sequence[int] | None = None) -> np.ndarray:
        idx = np.zeros(X.shape[0], dtype=np.int64)
        for i in range(self.depth) if order is None else order:
            idx |= self.pivots[i].goes_right(X).astype(np.int64) << i
        return idx

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.leaves[self.leaf_ids(X)]

    @classmethod
    def build(cls, data: InformationSystem, bag, pivots: Sequence[Pivot], eps: float = 1.0) -> "FernModel":
        """Fill the leaf table for fixed pivots from the objects in ``bag``."""
        rows = np.asarray(bag, dtype=np.intp)
        pivots = tuple(pivots)
        fern = cls(pivots, np.zeros((2 ** len(pivots), data.n_classes)))
        counts = np.zeros_like(fern.leaves, dtype=np.int64)
        np.add.at(counts, (fern.leaf_ids(data.X[rows]), data.y[rows]), 1)
        leaves = np.array([smoothed_distribution(c, eps) for c in counts])
        return cls(pivots, leaves)

    def to_dict(self) -> dict:
        return {"kind": "fern", "pivots": [p.to_dict() for p in self.pivots], "leaves": self.leaves.tolist()}

    @classmethod
    def from_dict(cls, d, schema, n_classes) -> "FernModel":
        pivots = tuple(_load_pivot(p, schema) for p in d["pivots"])
        if len(pivots) > MAX_FERN_DEPTH:
            raise ModelFormatError("fern deeper than the supported maximum")
        raw = d["leaves"]
        if len(raw) != 2 ** len(pivots):
            raise ModelFormatError(f"fern of depth {len(pivots)} needs {2 ** len(pivots)} leaves, got {len(raw)}")
        return cls(pivots, np.array([_load_dist(x, n_classes) for x in raw]).reshape(len(raw), n_classes))


def train_fern(data: InformationSystem, bag, cfg: SharpenerConfig, rng: np.random.Generator) -> FernModel:
    rows = np.asarray(bag, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("empty bag")
    pivots = []
    while rows.size >= 2 and len(pivots) < cfg.fern_depth:
        p = generate_pivot(cfg.strategy, data, rows, rng)
        if p is None:
            break
        pivots.append(p)
    return FernModel.build(data, rows, pivots, cfg.eps)


# --- decision trunk ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrunkModel:
    """Ordered ternary segments; the first segment answering A or B decides.

    ``dists[s]`` holds the (A-answer, B-answer) class distributions of
    segment ``s``; objects no segment decides get ``fallback``.
    """

    segments: tuple[TernaryPivot, ...]
    dists: tuple[tuple[np.ndarray, np.ndarray], ...]
    fallback: np.ndarray
    class_a: int = 0
    class_b: int = 1
    kind = "trunk"

    def leaf_ids(self, X: np.ndarray) -> np.ndarray:
        out = np.full(X.shape[0], 2 * len(self.segments), dtype=np.int64)
        pending = np.arange(X.shape[0])
        for s, seg in enumerate(self.segments):
            if pending.size == 0:
                break
            v = seg.verdicts(X[pending])
            done = v != Verdict.UNDECIDED
            out[pending[done]] = 2 * s + v[done]
            pending = pending[~done]
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        table = np.array([d for pair in self.dists for d in pair] + [self.fallback])
        return table[self.leaf_ids(X)]

    def truncated(self, n_segments: int) -> "TrunkModel":
        return replace(self, segments=self.segments[:n_segments], dists=self.dists[:n_segments])

    def to_dict(self) -> dict:
        return {
            "kind": "trunk",
            "class_a": self.class_a,
            "class_b": self.class_b,
            "segments": [
                dict(seg.to_dict(), dist_a=da.tolist(), dist_b=db.tolist())
                for seg, (da, db) in zip(self.segments, self.dists)
            ],
            "fallback": self.fallback.tolist(),
        }

    @classmethod
    def from_dict(cls, d, schema, n_classes) -> "TrunkModel":
        if n_classes != 2:
            raise ModelFormatError("trunk model on a non-binary decision")
        segs, dists = [], []
        for s in d["segments"]:
            t = TernaryPivot.from_dict(s)
            for p in (t.pivot_a, t.pivot_b):
                _load_pivot(p.to_dict(), schema)
            segs.append(t)
            dists.append((_load_dist(s["dist_a"], n_classes), _load_dist(s["dist_b"], n_classes)))
        return cls(tuple(segs), tuple(dists), _load_dist(d["fallback"], n_classes), int(d["class_a"]), int(d["class_b"]))


def train_trunk(data: InformationSystem, bag, cfg: SharpenerConfig, rng: np.random.Generator) -> TrunkModel:
    if data.n_classes != 2:
        raise ConfigError("trunk requires binary decision")
    rows = np.asarray(bag, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("empty bag")
    eps = cfg.eps
    segments, dists = [], []
    undecided = rows
    while len(segments) < cfg.max_segments and undecided.size >= 2:
        seg = generate_ternary(data, undecided, (0, 1), cfg.strategy, rng)
        if seg is None:
            break
        v = seg.verdicts(data.X[undecided])
        decided = v != Verdict.UNDECIDED
        if not decided.any():
            break
        segments.append(seg)
        dists.append(
            (
                smoothed_distribution(_counts(data, undecided[v == Verdict.A]), eps),
                smoothed_distribution(_counts(data, undecided[v == Verdict.B]), eps),
            )
        )
        undecided = undecided[~decided]
    rest = undecided if undecided.size else rows
    return TrunkModel(tuple(segments), tuple(dists), smoothed_distribution(_counts(data, rest), eps))


# --- null ensemble ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NullModel:
    """A single pivot; ``pivot`` is None when the bag could not be split."""

    pivot: Pivot | None
    dist_l: np.ndarray
    dist_r: np.ndarray
    kind = "null"

    def leaf_ids(self, X: np.ndarray) -> np.ndarray:
        if self.pivot is None:
            return np.zeros(X.shape[0], dtype=np.int64)
        return self.pivot.goes_right(X).astype(np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.leaf_ids(X)[:, None] == 1, self.dist_r, self.dist_l)

    @classmethod
    def build(cls, data: InformationSystem, bag, pivot: Pivot | None, eps: float = 1.0) -> "NullModel":
        rows = np.asarray(bag, dtype=np.intp)
        if pivot is None:
            d = smoothed_distribution(_counts(data, rows), eps)
            return cls(None, d, d.copy())
        r = pivot.goes_right(data.X[rows])
        return cls(
            pivot,
            smoothed_distribution(_counts(data, rows[~r]), eps),
            smoothed_distribution(_counts(data, rows[r]), eps),
        )

    def to_dict(self) -> dict:
        return {
            "kind": "null",
            "pivot": None if self.pivot is None else self.pivot.to_dict(),
            "dist_l": self.dist_l.tolist(),
            "dist_r": self.dist_r.tolist(),
        }

    @classmethod
    def from_dict(cls, d, schema, n_classes) -> "NullModel":
        p = None if d["pivot"] is None else _load_pivot(d["pivot"], schema)
        return cls(p, _load_dist(d["dist_l"], n_classes), _load_dist(d["dist_r"], n_classes))


def train_null(data: InformationSystem, bag, cfg: SharpenerConfig, rng: np.random.Generator) -> NullModel:
    rows = np.asarray(bag, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("empty bag")
    p = generate_pivot(cfg.strategy, data, rows, rng) if rows.size >= 2 else None
    return NullModel.build(data, rows, p, cfg.eps)


# --- dispatch ---------------------------------------------------------------

TRAINERS: dict[str, Callable] = {
    "tree": train_tree,
    "fern": train_fern,
    "trunk": train_trunk,
    "null": train_null,
}
MODEL_TYPES = {"tree": TreeModel, "fern": FernModel, "trunk": TrunkModel, "null": NullModel}


def train_sharpener(data: InformationSystem, bag, cfg: SharpenerConfig, rng: np.random.Generator):
    return TRAINERS[cfg.kind](data, bag, cfg, rng)


def predict_sharpener(model, data: InformationSystem, obj: int) -> np.ndarray:
    """Class distribution of one object."""
    return model.predict_proba(data.X[obj : obj + 1])[0]


def model_from_dict(d, schema: Sequence[FeatureSchema], n_classes: int):
    try:
        kind = d["kind"]
        cls = MODEL_TYPES[kind]
    except (KeyError, TypeError):
        raise ModelFormatError(f"unknown sharpener payload {str(d)[:60]!r}") from None
    try:
        return cls.from_dict(d, schema, n_classes)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} payload: {exc!r}") from None
