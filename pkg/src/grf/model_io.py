"""Versioned JSON model files (``.grf``).

Output is byte-deterministic: keys are sorted and floats use Python's
shortest round-trip repr, so save -> load -> save reproduces the same bytes
and a loaded model predicts bit-identically to the saved one.
"""

from __future__ import annotations

import json
from typing import BinaryIO

import numpy as np

from .conditioner import ForestConfig, ForestModel
from .dataset import FeatureSchema
from .errors import GRFError, ModelFormatError
from .sharpener import model_from_dict

FORMAT = "grf"
FORMAT_VERSION = 1


def model_to_dict(f: ForestModel) -> dict:
    return {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "fingerprint": f.fingerprint,
        "schema": {
            "features": [s.to_dict() for s in f.schema],
            "classes": list(f.classes),
            "decision": f.decision_name,
        },
        "config": f.config.to_dict(),
        "n_train": f.n_train,
        "inbag": ["".join("1" if b else "0" for b in row) for row in f.inbag],
        "members": [m.to_dict() for m in f.members],
    }


def dumps(f: ForestModel) -> bytes:
    text = json.dumps(model_to_dict(f), sort_keys=True, indent=1, ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


def save_model(f: ForestModel, sink: BinaryIO) -> None:
    sink.write(dumps(f))


def loads(raw: bytes | str) -> ForestModel:
    try:
        d = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"cannot parse model file: {exc}") from None
    if not isinstance(d, dict) or d.get("format") != FORMAT:
        raise ModelFormatError("not a grf model file")
    version = d.get("format_version")
    if not isinstance(version, int):
        raise ModelFormatError("missing format_version")
    if version > FORMAT_VERSION:
        raise ModelFormatError(f"model format version {version} is newer than supported ({FORMAT_VERSION})")
    try:
        return _from_dict(d)
    except ModelFormatError:
        raise
    except (GRFError, KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid model file: {exc!r}") from None


def load_model(source: BinaryIO) -> ForestModel:
    return loads(source.read())


def _from_dict(d: dict) -> ForestModel:
    sch = d["schema"]
    schema = tuple(FeatureSchema.from_dict(s) for s in sch["features"])
    classes = tuple(sch["classes"])
    config = ForestConfig.from_dict(d["config"])
    members_raw = d["members"]
    if not members_raw:
        raise ModelFormatError("model has no members")
    if len(members_raw) != config.members:
        raise ModelFormatError(f"config promises {config.members} members, file has {len(members_raw)}")
    n = int(d["n_train"])
    masks = d["inbag"]
    if len(masks) != len(members_raw) or any(len(m) != n or set(m) - {"0", "1"} for m in masks):
        raise ModelFormatError("in-bag masks do not match member count and training size")
    inbag = np.array([[c == "1" for c in m] for m in masks], dtype=bool).reshape(len(masks), n)
    members = []
    for m in members_raw:
        model = model_from_dict(m, schema, len(classes))
        if model.kind != config.sharpener.kind:
            raise ModelFormatError(f"member of kind {model.kind!r} in a {config.sharpener.kind!r} forest")
        members.append(model)
    f = ForestModel(tuple(members), inbag, config, schema, classes, str(sch.get("decision", "class")))
    if f.fingerprint != d.get("fingerprint"):
        raise ModelFormatError("schema fingerprint does not match the stored schema")
    return f
