"""Command-line interface: ``grf {train,predict,evaluate,importance,proximity}``.

Exit codes: 0 on success, 1 on data or model errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

import numpy as np

from .conditioner import ForestConfig, oob_error, permutation_importance, proximity, train_forest
from .dataset import SchemaHint, load_schema, parse_csv
from .errors import GRFError
from .model_io import load_model, save_model
from .pivot import GenerationStrategy
from .sharpener import SharpenerConfig

# flags that only make sense for one sharpener kind
_KIND_FLAGS = {
    "max_depth": "tree",
    "min_node_size": "tree",
    "fern_depth": "fern",
    "max_segments": "trunk",
}


def _mtry(value: str):
    if value in ("sqrt", "all"):
        return value
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count, 'sqrt' or 'all', got {value!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("--mtry must be non-negative")
    return n


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grf", description="Generalised random forest classifier.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a forest on a CSV file")
    t.add_argument("data", type=Path)
    t.add_argument("--decision", required=True, help="name of the decision column")
    t.add_argument("--schema", type=Path, help="JSON schema sidecar pinning feature kinds")
    t.add_argument("-o", "--output", type=Path, help="model file (default: <data>.grf)")
    t.add_argument("--sharpener", choices=("tree", "fern", "trunk", "null"), default="tree")
    t.add_argument("--pivot", choices=("optimised", "random", "heuristic"), default="optimised")
    t.add_argument("--heuristic-k", type=_positive)
    t.add_argument("--mtry", type=_mtry, default="sqrt")
    t.add_argument("--impurity", choices=("gini", "entropy"), default="gini")
    t.add_argument("--max-depth", type=_positive)
    t.add_argument("--min-node-size", type=_positive)
    t.add_argument("--fern-depth", type=_positive)
    t.add_argument("--max-segments", type=_positive)
    t.add_argument("--members", type=_positive, default=100)
    t.add_argument("--bag-fraction", type=float, default=1.0)
    t.add_argument("--no-replacement", action="store_true")
    t.add_argument("--vote", choices=("avg", "majority"), default="avg")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--workers", type=_positive)

    for name, helptext in (
        ("predict", "per-object labels and class probabilities"),
        ("evaluate", "accuracy and confusion matrix"),
        ("importance", "permutation feature importance (training data)"),
        ("proximity", "object-object proximity matrix"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("model", type=Path)
        p.add_argument("data", type=Path)
        if name == "importance":
            p.add_argument("--seed", type=int, default=0)
    return parser


def _config_from_args(args, parser) -> ForestConfig:
    for attr, kind in _KIND_FLAGS.items():
        if getattr(args, attr) is not None and args.sharpener != kind:
            parser.error(f"--{attr.replace('_', '-')} only applies to --sharpener {kind}")
    if args.heuristic_k is not None and args.pivot != "heuristic":
        parser.error("--heuristic-k only applies to --pivot heuristic")
    if not 0.0 < args.bag_fraction <= 1.0:
        parser.error("--bag-fraction must lie in (0, 1]")
    strategy = GenerationStrategy(
        kind=args.pivot,
        measure=args.impurity,
        k=args.heuristic_k or (16 if args.pivot == "heuristic" else 1),
        m_try=args.mtry,
    )
    sharpener = SharpenerConfig(
        kind=args.sharpener,
        strategy=strategy,
        max_depth=args.max_depth or 32,
        min_node_size=args.min_node_size or 1,
        fern_depth=args.fern_depth or 10,
        max_segments=args.max_segments or 10,
    )
    return ForestConfig(
        members=args.members,
        sharpener=sharpener,
        bag_fraction=args.bag_fraction,
        with_replacement=not args.no_replacement,
        vote="average" if args.vote == "avg" else "majority",
        seed=args.seed,
    )


def _workers(args, parser) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("GRF_WORKERS")
    if not env:
        return 1
    try:
        return _positive(env)
    except (ValueError, argparse.ArgumentTypeError):
        parser.error(f"GRF_WORKERS must be a positive integer, got {env!r}")


def _read_text(path: Path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def _load_for_model(model, path: Path, require_decision: bool):
    hint = SchemaHint(model.schema, model.classes, exact=True)
    return parse_csv(_read_text(path), model.decision_name, hint, require_decision=require_decision)


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def cmd_train(args, parser, out) -> int:
    cfg = _config_from_args(args, parser)
    workers = _workers(args, parser)
    hint = load_schema(_read_text(args.schema)) if args.schema else None
    data = parse_csv(_read_text(args.data), args.decision, hint)
    started = time.perf_counter()
    forest = train_forest(data, cfg, workers=workers)
    elapsed = time.perf_counter() - started
    target = args.output or args.data.with_suffix(".grf")
    with open(target, "wb") as fh:
        save_model(forest, fh)
    oob = oob_error(forest, data)
    print(f"members: {cfg.members}", file=out)
    print(f"oob_error: {oob.error:.6f}" if oob.defined else "oob_error: undefined", file=out)
    print(f"wall_time_s: {elapsed:.3f}", file=out)
    print(f"model: {target}", file=out)
    return 0


def cmd_predict(args, out) -> int:
    model = _open_model(args.model)
    data = _load_for_model(model, args.data, require_decision=False)
    labels, dist = model.predict(data)
    w = _writer(out)
    w.writerow(["id", "label"] + [f"p_{c}" for c in model.classes])
    for i in range(data.n_objects):
        w.writerow([i, model.classes[labels[i]]] + [repr(float(p)) for p in dist[i]])
    return 0


def cmd_evaluate(args, out) -> int:
    model = _open_model(args.model)
    data = _load_for_model(model, args.data, require_decision=True)
    labels, _ = model.predict(data)
    K = len(model.classes)
    confusion = np.zeros((K, K), dtype=np.int64)
    np.add.at(confusion, (data.y, labels), 1)
    w = _writer(out)
    w.writerow(["accuracy", repr(float(np.mean(labels == data.y)))])
    w.writerow(["actual\\predicted"] + list(model.classes))
    for k, c in enumerate(model.classes):
        w.writerow([c] + confusion[k].tolist())
    return 0


def cmd_importance(args, out) -> int:
    model = _open_model(args.model)
    data = _load_for_model(model, args.data, require_decision=True)
    report = permutation_importance(model, data, seed=args.seed)
    if not report.defined:
        raise GRFError("importance undefined: no member has out-of-bag objects")
    w = _writer(out)
    w.writerow(["feature", "importance", "std"])
    for name, m, s in zip(report.features, report.mean, report.std):
        w.writerow([name, repr(float(m)), repr(float(s))])
    return 0


def cmd_proximity(args, out) -> int:
    model = _open_model(args.model)
    data = _load_for_model(model, args.data, require_decision=False)
    w = _writer(out)
    for row in proximity(model, data):
        w.writerow([repr(float(v)) for v in row])
    return 0


def _open_model(path: Path):
    with open(path, "rb") as fh:
        return load_model(fh)


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args, parser, out)
        return {
            "predict": cmd_predict,
            "evaluate": cmd_evaluate,
            "importance": cmd_importance,
            "proximity": cmd_proximity,
        }[args.command](args, out)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); stop quietly like other filters
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 141
    except (GRFError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"grf: error: {msg}", file=sys.stderr)
        return 1
