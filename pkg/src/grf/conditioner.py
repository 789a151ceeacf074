"""Conditioning ensemble: bagged sharpeners, voting and the internal estimates
built on out-of-bag objects (error, permutation importance, proximity).

Member ``i`` draws its bag and trains from a random stream derived only from
``(seed, i)``, so a forest is identical whichever worker trains which member.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import FeatureSchema, InformationSystem, schema_fingerprint
from .errors import ConfigError, SchemaError
from .sharpener import SharpenerConfig, train_sharpener

VOTES = ("average", "majority")
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ForestConfig:
    members: int = 100
    sharpener: SharpenerConfig = field(default_factory=SharpenerConfig)
    bag_fraction: float = 1.0
    with_replacement: bool = True
    vote: str = "average"
    seed: int = 0

    def __post_init__(self):
        if self.members < 1:
            raise ConfigError("a forest needs at least one member")
        if not 0.0 < self.bag_fraction <= 1.0:
            raise ConfigError("bag_fraction must lie in (0, 1]")
        if self.vote not in VOTES:
            raise ConfigError(f"unknown vote rule {self.vote!r}")
        if not -(1 << 63) <= self.seed <= _SEED_MASK:
            raise ConfigError("seed must fit in 64 bits")

    def to_dict(self) -> dict:
        return {
            "members": self.members,
            "sharpener": self.sharpener.to_dict(),
            "bag_fraction": self.bag_fraction,
            "with_replacement": self.with_replacement,
            "vote": self.vote,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d) -> "ForestConfig":
        d = dict(d)
        d["sharpener"] = SharpenerConfig.from_dict(d["sharpener"])
        return cls(**d)


def member_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed & _SEED_MASK, spawn_key=(index,)))


def bag_size(n: int, fraction: float) -> int:
    return max(1, math.ceil(fraction * n - 1e-9))


def bootstrap(n: int, cfg: ForestConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw one bag of object indices and its in-bag mask."""
    if n < 1:
        raise ValueError("bootstrap of an empty dataset")
    m = bag_size(n, cfg.bag_fraction)
    if cfg.with_replacement:
        bag = rng.integers(0, n, size=m)
    else:
        bag = np.sort(rng.choice(n, size=m, replace=False))
    mask = np.zeros(n, dtype=bool)
    mask[bag] = True
    return bag, mask


def train_member(data: InformationSystem, cfg: ForestConfig, index: int):
    rng = member_rng(cfg.seed, index)
    bag, mask = bootstrap(data.n_objects, cfg, rng)
    return train_sharpener(data, bag, cfg.sharpener, rng), mask


_worker_state: tuple | None = None


def _init_worker(data, cfg):
    global _worker_state
    _worker_state = (data, cfg)


def _train_in_worker(index):
    data, cfg = _worker_state
    return train_member(data, cfg, index)


@dataclass(frozen=True, eq=False)
class ForestModel:
    members: tuple
    inbag: np.ndarray  # (B, n) bool
    config: ForestConfig
    schema: tuple[FeatureSchema, ...]
    classes: tuple[str, ...]
    decision_name: str = "class"

    def __post_init__(self):
        if len(self.members) < 1:
            raise ConfigError("a forest needs at least one member")
        if self.inbag.ndim != 2 or self.inbag.shape[0] != len(self.members):
            raise ConfigError("one in-bag mask per member required")

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.schema, self.classes)

    @property
    def n_train(self) -> int:
        return self.inbag.shape[1]

    def check_data(self, data: InformationSystem) -> None:
        if data.fingerprint() != self.fingerprint:
            raise SchemaError("dataset schema does not match the model")

    def member_probas(self, X: np.ndarray) -> np.ndarray:
        """``(B, n, K)`` stack of member predictions."""
        return np.stack([m.predict_proba(X) for m in self.members])

    def predict(self, data: InformationSystem) -> tuple[np.ndarray, np.ndarray]:
        """Labels and class distributions for every object of ``data``."""
        self.check_data(data)
        dist = vote(self.member_probas(data.X), self.config.vote)
        return np.argmax(dist, axis=1), dist


def train_forest(data: InformationSystem, cfg: ForestConfig, workers: int = 1) -> ForestModel:
    if data.y is None:
        raise ValueError("training needs a labelled information system")
    if cfg.sharpener.kind == "trunk" and data.n_classes != 2:
        raise ConfigError("trunk requires binary decision")
    cfg.sharpener.strategy.features_to_try(data.n_features)
    if workers > 1 and cfg.members > 1:
        chunk = max(1, cfg.members // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(data, cfg)) as ex:
            results = list(ex.map(_train_in_worker, range(cfg.members), chunksize=chunk))
    else:
        results = [train_member(data, cfg, i) for i in range(cfg.members)]
    members, masks = zip(*results)
    return ForestModel(tuple(members), np.stack(masks), cfg, data.schema, data.classes, data.decision_name)


def vote(P: np.ndarray, rule: str) -> np.ndarray:
    """Combine a ``(B, n, K)`` stack of member distributions.

    ``average`` takes the mean distribution; ``majority`` returns the share of
    members whose argmax (lowest class on ties) names each class.
    """
    if rule == "average":
        # rounding can push the mean a hair outside the member range
        return np.clip(P.mean(axis=0), P.min(axis=0), P.max(axis=0))
    if rule == "majority":
        B, n, K = P.shape
        winners = np.argmax(P, axis=2)
        shares = np.zeros((n, K))
        for w in winners:
            shares[np.arange(n), w] += 1
        return shares / B
    raise ConfigError(f"unknown vote rule {rule!r}")


def predict_forest(f: ForestModel, data: InformationSystem, obj: int) -> tuple[int, np.ndarray]:
    f.check_data(data)
    dist = vote(f.member_probas(data.X[obj : obj + 1]), f.config.vote)[0]
    return int(np.argmax(dist)), dist


def _check_training_data(f: ForestModel, data: InformationSystem):
    f.check_data(data)
    if data.n_objects != f.n_train:
        raise SchemaError(f"model was trained on {f.n_train} objects, got {data.n_objects}")
    if data.y is None:
        raise ValueError("out-of-bag estimates need the decision column")


@dataclass(frozen=True, eq=False)
class OOBResult:
    error: float | None  # None when no object is out of bag anywhere
    labels: np.ndarray  # -1 for uncovered objects
    dist: np.ndarray  # NaN rows for uncovered objects
    covered: np.ndarray

    @property
    def defined(self) -> bool:
        return self.error is not None


def oob_error(f: ForestModel, data: InformationSystem) -> OOBResult:
    """Out-of-bag error; ``data`` must be the training set, in training order."""
    _check_training_data(f, data)
    P = f.member_probas(data.X)
    oob = ~f.inbag
    n_oob = oob.sum(axis=0)
    covered = n_oob > 0
    K = data.n_classes
    if f.config.vote == "majority":
        votes = np.eye(K)[np.argmax(P, axis=2)]
        P = votes
    summed = np.einsum("bn,bnk->nk", oob.astype(np.float64), P)
    dist = np.full((data.n_objects, K), np.nan)
    dist[covered] = summed[covered] / n_oob[covered, None]
    labels = np.full(data.n_objects, -1, dtype=np.int64)
    labels[covered] = np.argmax(dist[covered], axis=1)
    error = float(np.mean(labels[covered] != data.y[covered])) if covered.any() else None
    return OOBResult(error, labels, dist, covered)


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    features: tuple[str, ...]
    mean: np.ndarray  # mean OOB accuracy decrease per feature
    std: np.ndarray  # spread of that decrease across members
    n_members: int  # members with at least one OOB object

    @property
    def defined(self) -> bool:
        return self.n_members > 0

    def ranking(self) -> list[str]:
        order = sorted(range(len(self.features)), key=lambda j: (-self.mean[j], j))
        return [self.features[j] for j in order]


def permutation_importance(f: ForestModel, data: InformationSystem, seed: int = 0) -> ImportanceReport:
    """OOB accuracy lost when one feature's OOB values are shuffled.

    One permutation per (member, feature); each member's shuffles come from a
    stream derived from ``(seed, member)``.
    """
    _check_training_data(f, data)
    p = data.n_features
    drops = []
    for i, (m, bag) in enumerate(zip(f.members, f.inbag)):
        rows = np.flatnonzero(~bag)
        if rows.size == 0:
            continue
        rng = member_rng(seed, i)
        X = data.X[rows]
        y = data.y[rows]
        base = np.mean(np.argmax(m.predict_proba(X), axis=1) == y)
        d = np.empty(p)
        for j in range(p):
            Xp = X.copy()
            Xp[:, j] = rng.permutation(Xp[:, j])
            d[j] = base - np.mean(np.argmax(m.predict_proba(Xp), axis=1) == y)
        drops.append(d)
    names = tuple(s.name for s in data.schema)
    if not drops:
        nan = np.full(p, np.nan)
        return ImportanceReport(names, nan, nan.copy(), 0)
    drops = np.array(drops)
    return ImportanceReport(names, drops.mean(axis=0), drops.std(axis=0), len(drops))


def proximity(f: ForestModel, data: InformationSystem, subset: Sequence[int] | None = None) -> np.ndarray:
    """Fraction of members in which each pair of objects shares a terminal region."""
    f.check_data(data)
    X = data.X if subset is None else data.X[np.asarray(subset, dtype=np.intp)]
    n = X.shape[0]
    same = np.zeros((n, n), dtype=np.int64)
    for m in f.members:
        ids = m.leaf_ids(X)
        same += ids[:, None] == ids[None, :]
    return same / len(f.members)
