"""Information systems: typed predictor columns plus a categorical decision.

Categorical values are stored as category indices inside the same float
matrix as continuous values, so every downstream routine works on a single
``(n, p)`` array.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .errors import DataError

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, CONTINUOUS):
            raise DataError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CONTINUOUS:
            if self.categories is not None:
                raise DataError(f"continuous feature {self.name!r} cannot list categories")
            return
        if self.categories is None:
            raise DataError(f"categorical feature {self.name!r} needs a category list")
        cats = tuple(self.categories)
        object.__setattr__(self, "categories", cats)
        if any(c == "" for c in cats):
            raise DataError(f"feature {self.name!r}: empty category label")
        if len(set(cats)) != len(cats):
            raise DataError(f"feature {self.name!r}: duplicate category labels")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.categories is not None:
            d["categories"] = list(self.categories)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "FeatureSchema":
        cats = d.get("categories")
        return cls(str(d["name"]), str(d["kind"]), None if cats is None else tuple(map(str, cats)))


@dataclass(frozen=True, eq=False)
class InformationSystem:
    """Immutable tabular dataset.

    ``X`` holds one row per object; categorical cells carry the index of the
    category in the feature's schema. ``y`` holds class indices into
    ``classes`` and is ``None`` for unlabelled data (prediction input).
    """

    schema: tuple[FeatureSchema, ...]
    X: np.ndarray
    y: np.ndarray | None
    classes: tuple[str, ...]
    decision_name: str = "class"

    def __post_init__(self):
        schema = tuple(self.schema)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "classes", tuple(self.classes))
        if not schema:
            raise DataError("no predictor features")
        X = np.array(self.X, dtype=np.float64, copy=True)
        if X.ndim != 2 or X.shape[1] != len(schema):
            raise DataError(f"X must have shape (n, {len(schema)}), got {X.shape}")
        if len(self.classes) < 2:
            raise DataError("fewer than 2 decision classes")
        if len(set(self.classes)) != len(self.classes):
            raise DataError("duplicate class labels")
        if not np.all(np.isfinite(X)):
            raise DataError("non-finite predictor values")
        for j, f in enumerate(schema):
            if f.is_categorical:
                col = X[:, j]
                if np.any(col != np.floor(col)) or np.any(col < 0) or np.any(col >= len(f.categories)):
                    raise DataError(f"feature {f.name!r}: invalid category index")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.array(self.y, dtype=np.int64, copy=True)
            if y.shape != (X.shape[0],):
                raise DataError("decision length differs from object count")
            if X.shape[0] < 1:
                raise DataError("labelled information system needs at least one object")
            if np.any(y < 0) or np.any(y >= len(self.classes)):
                raise DataError("decision value out of class range")
            y.setflags(write=False)
            object.__setattr__(self, "y", y)

    @property
    def n_objects(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.schema)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def labelled(self) -> bool:
        return self.y is not None

    def fingerprint(self) -> str:
        return schema_fingerprint(self.schema, self.classes)

    def __eq__(self, other):
        if not isinstance(other, InformationSystem):
            return NotImplemented
        if (self.schema, self.classes, self.decision_name) != (other.schema, other.classes, other.decision_name):
            return False
        if self.X.shape != other.X.shape or not np.array_equal(self.X, other.X):
            return False
        if (self.y is None) != (other.y is None):
            return False
        return self.y is None or np.array_equal(self.y, other.y)

    __hash__ = None


def schema_fingerprint(schema: Sequence[FeatureSchema], classes: Sequence[str]) -> str:
    payload = json.dumps(
        {"features": [f.to_dict() for f in schema], "classes": list(classes)},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class SchemaHint:
    """Pinned feature kinds (and optionally category / class order).

    With ``exact`` the CSV must carry exactly the pinned predictors, and the
    resulting feature order follows the hint rather than the header.
    """

    features: tuple[FeatureSchema, ...] = ()
    classes: tuple[str, ...] | None = None
    exact: bool = False
    by_name: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DataError("schema lists a feature twice")
        object.__setattr__(self, "by_name", {f.name: f for f in self.features})


def load_schema(source: str | TextIO) -> SchemaHint:
    """Read a JSON schema sidecar.

    Layout::

        {"features": [{"name": "colour", "kind": "categorical",
                       "categories": ["red", "blue"]},
                      {"name": "size", "kind": "continuous"}],
         "classes": ["no", "yes"]}

    A categorical entry may omit ``categories`` to keep first-appearance order.
    """
    text = source if isinstance(source, str) else source.read()
    try:
        raw = json.loads(text)
        feats = []
        for d in raw.get("features", []):
            if d.get("kind") == CATEGORICAL and d.get("categories") is None:
                feats.append(_PartialCategorical(str(d["name"])))
            else:
                feats.append(FeatureSchema.from_dict(d))
        classes = raw.get("classes")
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise DataError(f"malformed schema file: {exc}") from None
    return SchemaHint(tuple(feats), None if classes is None else tuple(map(str, classes)))


class _PartialCategorical(FeatureSchema):
    """Categorical pin whose categories are inferred from the data."""

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "kind", CATEGORICAL)
        object.__setattr__(self, "categories", None)


def _is_finite_number(s: str) -> bool:
    return bool(_NUMBER.match(s)) and math.isfinite(float(s))


def _first_appearance(values: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(values))


def _encode_column(name: str, values: list[str], pin: FeatureSchema | None) -> tuple[FeatureSchema, np.ndarray]:
    if pin is None:
        kind = CONTINUOUS if all(_is_finite_number(v) for v in values) else CATEGORICAL
        pin = FeatureSchema(name, CONTINUOUS) if kind == CONTINUOUS else _PartialCategorical(name)
    if pin.kind == CONTINUOUS:
        out = np.empty(len(values))
        for i, v in enumerate(values):
            if not _is_finite_number(v):
                raise DataError(f"column {name!r}, row {i + 1}: {v!r} is not a finite number")
            out[i] = float(v)
        return FeatureSchema(name, CONTINUOUS), out
    cats = pin.categories if pin.categories is not None else _first_appearance(values)
    index = {c: k for k, c in enumerate(cats)}
    out = np.empty(len(values))
    for i, v in enumerate(values):
        k = index.get(v)
        if k is None:
            raise DataError(f"column {name!r}, row {i + 1}: unknown category {v!r}")
        out[i] = k
    return FeatureSchema(name, CATEGORICAL, cats), out


def parse_csv(
    text: str | TextIO,
    decision_column: str,
    schema_hint: SchemaHint | None = None,
    require_decision: bool = True,
) -> InformationSystem:
    """Parse comma-separated text with a header row into an InformationSystem.

    Without a hint a column is continuous iff every value is a finite real
    literal; otherwise it is categorical with categories in first-appearance
    order. Empty cells are rejected. With ``require_decision=False`` the
    decision column may be absent, giving unlabelled data (the class list
    must then come from the hint).
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    rows = [r for r in csv.reader(stream) if r]
    if not rows:
        raise DataError("empty input: no header row")
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    hint = schema_hint or SchemaHint()

    has_decision = decision_column in header
    if require_decision and not has_decision:
        raise DataError(f"decision column {decision_column!r} not found in header")
    if not has_decision and hint.classes is None:
        raise DataError("unlabelled data needs the class list from a schema")

    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(r)}")
        for name, v in zip(header, r):
            if v == "":
                raise DataError(f"line {lineno}: missing value in column {name!r}")

    columns = {name: [r[j] for r in body] for j, name in enumerate(header)}
    predictor_names = [h for h in header if h != decision_column]
    if hint.exact:
        wanted = [f.name for f in hint.features]
        missing = [w for w in wanted if w not in columns]
        extra = [h for h in predictor_names if h not in hint.by_name]
        if missing or extra:
            raise DataError(f"columns do not match model schema (missing {missing}, unexpected {extra})")
        predictor_names = wanted
    else:
        unknown = [f.name for f in hint.features if f.name not in columns]
        if unknown:
            raise DataError(f"schema names columns absent from the data: {unknown}")
    if not predictor_names:
        raise DataError("no predictor columns besides the decision")

    schema, cols = [], []
    for name in predictor_names:
        f, col = _encode_column(name, columns[name], hint.by_name.get(name))
        schema.append(f)
        cols.append(col)
    X = np.column_stack(cols) if body else np.empty((0, len(schema)))

    y = None
    classes = hint.classes
    if has_decision and (body or require_decision):
        labels = columns[decision_column]
        if classes is None:
            classes = _first_appearance(labels)
        index = {c: k for k, c in enumerate(classes)}
        try:
            y = np.array([index[v] for v in labels], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"unknown decision class {exc.args[0]!r}") from None
    if len(classes) < 2:
        raise DataError("fewer than 2 decision classes")
    return InformationSystem(tuple(schema), X, y, tuple(classes), decision_column)


def format_value(f: FeatureSchema, v: float) -> str:
    return f.categories[int(v)] if f.is_categorical else repr(float(v))


def to_csv(data: InformationSystem) -> str:
    """Serialise to CSV text that `parse_csv` reads back identically."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = [f.name for f in data.schema]
    if data.labelled:
        header.append(data.decision_name)
    w.writerow(header)
    for i in range(data.n_objects):
        row = [format_value(f, data.X[i, j]) for j, f in enumerate(data.schema)]
        if data.labelled:
            row.append(data.classes[data.y[i]])
        w.writerow(row)
    return buf.getvalue()


def class_counts(y: np.ndarray, subset, n_classes: int) -> np.ndarray:
    return np.bincount(y[np.asarray(subset, dtype=np.intp)], minlength=n_classes)


def class_distribution(data: InformationSystem, subset) -> np.ndarray:
    """Empirical class frequencies over ``subset`` (a multiset of row indices)."""
    idx = np.asarray(subset, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("class distribution of an empty subset")
    if data.y is None:
        raise ValueError("unlabelled information system")
    return class_counts(data.y, idx, data.n_classes) / idx.size


def smoothed_distribution(counts: np.ndarray, eps: float) -> np.ndarray:
    """Additive smoothing; falls back to uniform when nothing is observed."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum() + eps * counts.size
    if total <= 0:
        return np.full(counts.size, 1.0 / counts.size)
    return (counts + eps) / total
