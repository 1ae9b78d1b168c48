"""Command-line entry points.

Thin wrappers over the library plus a `serve` command for the HTTP
service. Exit codes: 0 success, 1 usage error, 2 data error. Paths can be
preset through GREC_-prefixed environment variables where noted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, augment, ohseval, personalize, retrieval, toynet
from .catalog import (
    EMB_MAGIC,
    Catalog,
    load_cart,
    load_embeddings,
    load_manifest,
    write_vector_records,
)
from .errors import DataError

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    """argparse reserves exit code 2; remap usage errors to 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _env(name: str, default=None):
    return os.environ.get(f"GREC_{name}", default)


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _print_ranked(ranked: list[tuple[str, float]], as_json: bool) -> None:
    if as_json:
        print(json.dumps({"results": [{"id": i, "score": s} for i, s in ranked]}))
    else:
        for item_id, score in ranked:
            print(f"{item_id}\t{score:.6f}")


def _load_catalog_with_embeddings(manifest: str, embeddings: str) -> Catalog:
    catalog = load_manifest(manifest)
    load_embeddings(embeddings, catalog)
    return catalog


# --- subcommand handlers ---------------------------------------------------


def _cmd_build_index(args) -> int:
    catalog = _load_catalog_with_embeddings(args.manifest, args.embeddings)
    index = retrieval.build_index(catalog)
    retrieval.save_index(index, args.out)
    print(f"indexed {len(index)} items of dimension {index.dimension} -> {args.out}")
    return 0


def _cmd_query(args) -> int:
    index = retrieval.load_index(args.index)
    exclude = set(args.exclude or [])
    if args.item is not None:
        if args.item not in index:
            raise DataError(f"item {args.item!r} is not in the index")
        query = index.vector(args.item)
        exclude.add(args.item)
    else:
        query = np.array([float(x) for x in args.vector.split(",")])
    ranked = retrieval.top_k(query, index, args.k, exclude=exclude)
    _print_ranked(ranked, args.json)
    return 0


def _cmd_cart_recommend(args) -> int:
    catalog = _load_catalog_with_embeddings(args.manifest, args.embeddings)
    index = retrieval.load_index(args.index) if args.index else retrieval.build_index(catalog)
    cart = load_cart(args.cart)
    ranked = personalize.recommend_for_cart(cart, catalog, index, args.k)
    _print_ranked(ranked, args.json)
    return 0


def _cmd_augment(args) -> int:
    catalog = load_manifest(args.manifest)
    plan = augment.AugmentPlan(
        seed=args.seed,
        flip=not args.no_flip,
        rotation_range=args.rotation,
        shift_range=args.shift,
        shear_range=args.shear,
        scale_range=(args.scale_min, args.scale_max),
        backgrounds=augment.list_backgrounds(args.backgrounds),
        tolerance=args.tolerance,
    )
    manifest_dir = Path(args.manifest).parent
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for item in catalog.items:
        image_path = Path(item.image_ref)
        if not image_path.is_absolute():
            image_path = manifest_dir / image_path
        image = augment.load_image(image_path)
        result = augment.augment_item(image, item.id, args.epoch, plan)
        safe_id = item.id.replace(os.sep, "_").replace("/", "_")
        augment.save_image(result, out_dir / f"{safe_id}.png")
        written += 1
    print(f"augmented {written} items for epoch {args.epoch} -> {out_dir}")
    return 0


def _load_feature_dataset(path: str):
    """JSONL of {"id", "features": [...], "labels": [...]} rows."""
    ids: list[str] = []
    features: list[list[float]] = []
    label_rows: list[list[str]] = []
    label_order: list[str] = []
    label_pos: dict[str, int] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            row_id = str(obj["id"])
            feats = [float(x) for x in obj["features"]]
            labels = [str(x) for x in obj["labels"]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{line_no}: bad dataset line: {exc}") from exc
        ids.append(row_id)
        features.append(feats)
        label_rows.append(labels)
        for name in labels:
            if name not in label_pos:
                label_pos[name] = len(label_order)
                label_order.append(name)
    if not ids:
        raise DataError(f"empty dataset {path}")
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"{path}: feature rows have inconsistent lengths")
    t = np.zeros((len(ids), len(label_order)))
    for i, labels in enumerate(label_rows):
        for name in labels:
            t[i, label_pos[name]] = 1.0
    return ids, x, label_order, t


def _cmd_train_toy(args) -> int:
    if args.data is not None:
        _, x, label_order, t = _load_feature_dataset(args.data)
        frequencies = t.mean(axis=0)
        if np.any(frequencies <= 0):
            missing = [label_order[i] for i in np.where(frequencies <= 0)[0]]
            raise DataError(f"labels never used by any item: {missing}")
    else:
        x, t = toynet.make_separable_dataset(args.samples, seed=args.seed)
        label_order = ["group_a", "group_b"]
        frequencies = t.mean(axis=0)
    from .lossmetrics import label_weights

    weights = label_weights(frequencies)
    config = toynet.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        use_scaling=not args.no_scaling,
    )
    model, history = toynet.train(x, t, config, weights, hidden_dim=args.hidden)
    toynet.save_model(model, args.out)
    if args.history:
        toynet.write_history(history, args.history)
    first, last = history[0], history[-1]
    if args.json:
        print(
            json.dumps(
                {
                    "labels": label_order,
                    "epochs": len(history),
                    "first_loss": first.loss,
                    "final_loss": last.loss,
                }
            )
        )
    else:
        print(
            f"trained {len(history)} epochs on {x.shape[0]} samples: "
            f"loss {first.loss:.6f} -> {last.loss:.6f}"
        )
    return 0


def _cmd_embed(args) -> int:
    if args.data is not None and not args.out:
        print("grec embed: error: --out is required with --data", file=sys.stderr)
        return USAGE_ERROR
    model = toynet.load_model(args.model)
    if args.vector is not None:
        x = np.array([float(v) for v in args.vector.split(",")])
        vec = toynet.embed(x, model)
        print(json.dumps({"embedding": vec.tolist()}))
        return 0
    ids, x, _, _ = _load_feature_dataset(args.data)
    hidden = toynet.embed(x, model)
    write_vector_records(args.out, EMB_MAGIC, ids, hidden.astype("<f4"))
    print(f"embedded {len(ids)} items of dimension {hidden.shape[1]} -> {args.out}")
    return 0


def _load_criteria(path: str | None):
    if path is None:
        return ohseval.DEFAULT_CRITERIA
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return tuple(
            ohseval.Criterion(c["name"], float(c["weight"]), str(c.get("description", "")))
            for c in raw
        )
    except OSError as exc:
        raise DataError(f"cannot read criteria {path}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad criteria file: {exc}") from exc


def _cmd_eval_sheet(args) -> int:
    try:
        raw_queries = json.loads(Path(args.queries).read_text(encoding="utf-8"))
        queries = [
            (str(q["query_id"]), str(q["image"]), str(q["domain"])) for q in raw_queries
        ]
    except OSError as exc:
        raise DataError(f"cannot read queries {args.queries}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{args.queries}: bad queries file: {exc}") from exc
    systems: dict[str, dict[str, list[str]]] = {}
    for spec in args.results:
        name, _, path = spec.partition("=")
        if not name or not path:
            raise DataError(f"--results expects NAME=FILE, got {spec!r}")
        try:
            systems[name] = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"cannot read results {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: malformed results JSON: {exc.msg}") from exc
    sheet = ohseval.make_sheet(
        args.id, queries, systems, k=args.k, criteria=_load_criteria(args.criteria)
    )
    ohseval.save_sheet(sheet, args.out)
    print(
        f"sheet {sheet.sheet_id}: {len(sheet.queries)} queries x "
        f"{len(sheet.systems)} systems -> {args.out}"
    )
    return 0


def _load_score_records(path: str, sheet_id: str) -> list[ohseval.ScoreRecord]:
    p = Path(path)
    files: list[Path]
    if p.is_dir():
        files = sorted(q for q in p.iterdir() if q.suffix in (".json", ".jsonl"))
    elif p.exists():
        files = [p]
    else:
        raise DataError(f"scores path {path} does not exist")
    records: list[ohseval.ScoreRecord] = []
    for file in files:
        text = file.read_text(encoding="utf-8")
        try:
            if file.suffix == ".jsonl":
                objs = [json.loads(line) for line in text.splitlines() if line.strip()]
            else:
                parsed = json.loads(text)
                objs = parsed if isinstance(parsed, list) else [parsed]
        except json.JSONDecodeError as exc:
            raise DataError(f"{file}: malformed scores JSON: {exc.msg}") from exc
        for obj in objs:
            record = ohseval.record_from_dict(obj)
            if record.sheet_id == sheet_id:
                records.append(record)
    return records


def _load_weights(path: str | None) -> dict[str, float] | None:
    if path is None:
        return None
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return {str(k): float(v) for k, v in raw.items()}
    except OSError as exc:
        raise DataError(f"cannot read weights {path}: {exc}") from exc
    except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad weights file: {exc}") from exc


def _aggregate_from_args(args) -> ohseval.AggregateResult:
    sheet = ohseval.load_sheet(args.sheet)
    records = _load_score_records(args.scores, sheet.sheet_id)
    return ohseval.aggregate(sheet, records, _load_weights(args.weights))


def _cmd_eval_aggregate(args) -> int:
    result = _aggregate_from_args(args)
    if args.json:
        print(
            json.dumps(
                {
                    "systems": list(result.systems),
                    "criteria": list(result.criteria),
                    "cells": {s: dict(row) for s, row in result.cells.items()},
                    "ohs": dict(result.ohs),
                    "gaps": [list(g) for g in result.gaps],
                }
            )
        )
        return 0
    for system in result.systems:
        ohs = result.ohs[system]
        print(f"{system}: OHS = {'-' if ohs is None else f'{ohs:.2f}'}")
        for name in result.criteria:
            value = result.cells[system][name]
            print(f"  {name}: {'-' if value is None else f'{value:.2f}'}")
    if result.gaps:
        print(f"gaps (no scores): {', '.join('/'.join(g) for g in result.gaps)}")
    return 0


def _cmd_report(args) -> int:
    result = _aggregate_from_args(args)
    table = ohseval.render_comparison(result)
    sys.stdout.write(ohseval.table_to_text(table))
    if args.csv:
        Path(args.csv).write_text(ohseval.table_to_csv(table), encoding="utf-8")
        print(f"csv written -> {args.csv}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        manifest=Path(args.manifest),
        embeddings=Path(args.embeddings) if args.embeddings else None,
        index=Path(args.index) if args.index else None,
        sheets_dir=Path(args.sheets) if args.sheets else None,
        scores_path=Path(args.scores) if args.scores else None,
        ui_dir=Path(args.ui) if args.ui else None,
        host=args.host,
        port=args.port,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"grec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("build-index", help="build an IDX1 index from manifest + embeddings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_index)

    p = sub.add_parser("query", help="top-k similar items for an indexed item or raw vector")
    p.add_argument("--index", required=True)
    who = p.add_mutually_exclusive_group(required=True)
    who.add_argument("--item", help="indexed item id (excluded from its own results)")
    who.add_argument("--vector", help="comma-separated query vector")
    p.add_argument("--k", type=_positive_int, default=8)
    p.add_argument("--exclude", action="append", default=[])
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("cart-recommend", help="recommend for a rated cart")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--cart", required=True)
    p.add_argument("--index", help="reuse a prebuilt index instead of building one")
    p.add_argument("--k", type=_positive_int, default=8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_cart_recommend)

    p = sub.add_parser("augment", help="background-composited augmentation for one epoch")
    p.add_argument("--manifest", required=True)
    p.add_argument("--backgrounds", required=True)
    p.add_argument("--epoch", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--tolerance", type=int, default=augment.DEFAULT_TOLERANCE)
    p.add_argument("--no-flip", action="store_true")
    p.add_argument("--rotation", type=float, default=15.0, help="degrees")
    p.add_argument("--shift", type=float, default=8.0, help="pixels")
    p.add_argument("--shear", type=float, default=8.0, help="degrees")
    p.add_argument("--scale-min", type=float, default=1.0)
    p.add_argument("--scale-max", type=float, default=1.0)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("train-toy", help="train the reference classifier")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="JSONL of id/features/labels rows")
    src.add_argument("--synthetic", action="store_true", help="built-in separable dataset")
    p.add_argument("--samples", type=_positive_int, default=200)
    p.add_argument("--epochs", type=_positive_int, default=50)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--batch-size", type=_positive_int, default=32)
    p.add_argument("--hidden", type=_positive_int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-scaling", action="store_true", help="train on the plain weighted loss")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--history", help="loss history CSV path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("embed", help="embed dataset rows with a trained model")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="JSONL of id/features/labels rows")
    src.add_argument("--vector", help="comma-separated feature vector")
    p.add_argument("--out", help="EMB1 output path (required with --data)")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("eval-sheet", help="build an evaluation sheet from result files")
    p.add_argument("--id", required=True)
    p.add_argument("--queries", required=True, help="JSON list of query_id/image/domain")
    p.add_argument(
        "--results",
        action="append",
        required=True,
        metavar="NAME=FILE",
        help="per-system results file, repeatable",
    )
    p.add_argument("--k", type=_positive_int, default=ohseval.MAX_RESULTS)
    p.add_argument("--criteria", help="JSON criteria file (default: built-in seven)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_sheet)

    p = sub.add_parser("eval-aggregate", help="aggregate score records for a sheet")
    p.add_argument("--sheet", required=True)
    p.add_argument("--scores", required=True, help="record file or directory")
    p.add_argument("--weights", help="JSON {criterion: weight} (default: sheet weights)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval_aggregate)

    p = sub.add_parser("report", help="render the side-by-side comparison table")
    p.add_argument("--sheet", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--weights")
    p.add_argument("--csv", help="also write the CSV rendering here")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--manifest", default=_env("MANIFEST"), required=_env("MANIFEST") is None)
    p.add_argument("--embeddings", default=_env("EMBEDDINGS"))
    p.add_argument("--index", default=_env("INDEX"))
    p.add_argument("--sheets", default=_env("SHEETS_DIR"))
    p.add_argument("--scores", default=_env("SCORES"))
    p.add_argument("--ui", default=_env("UI"))
    p.add_argument("--host", default=_env("HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(_env("PORT", "8000")))
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (DataError, OSError, ValueError, toynet.TrainingDivergence) as exc:
        print(f"grec: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
