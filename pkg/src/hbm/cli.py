"""Command-line entry point.

Commands: train, eval, experiment, explain, replay. Every command writes a
``<output>.manifest.json`` recording the literal argv, all resolved values,
and the engine version; ``hbm replay run.manifest.json`` re-executes the
recorded command. Exit codes: 0 success, 2 usage, 3 data/format/config, 4
training.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import __version__
from .errors import HbmError, TrainingError
from .metrics import auc
from .model import ModelConfig
from .saliency import DEFAULT_RATIO, explain, export_bundle
from .storage import (
    EmbeddedDataset,
    load_checkpoint,
    read_dataset,
    save_checkpoint,
)
from .trainer import (
    SplitSpec,
    TrainConfig,
    predict,
    run_experiment,
    subsample,
    train,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRAINING = 4

DEFAULT_LABELS = ["class 0", "class 1"]


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        f.write("\n")


def _write_manifest(args: argparse.Namespace, argv: list[str], outputs: list[str]) -> None:
    resolved = {
        k: v for k, v in vars(args).items()
        if k not in ("func", "manifest_anchor", "manifest_key")
    }
    manifest = {
        "command": args.command,
        "argv": argv,
        "resolved": resolved,
        "engine_version": __version__,
        "outputs": outputs,
    }
    _write_json(args.manifest_anchor + ".manifest.json", manifest)


def _num_classes(dataset: EmbeddedDataset) -> int:
    return max(2, int(dataset.labels().max()) + 1)


def _model_config(args: argparse.Namespace, dataset: EmbeddedDataset) -> ModelConfig:
    m = args.m
    if m is None:
        m = max(d.sentence_count for d in dataset.documents)
    return ModelConfig(
        embed_dim=dataset.embed_dim,
        max_sentences=m,
        layers=args.layers,
        heads=args.heads,
        dropout_p=args.dropout,
        num_classes=_num_classes(dataset),
    ).validate()


def _cmd_train(args: argparse.Namespace, argv: list[str]) -> int:
    dataset = read_dataset(args.data)
    config = _model_config(args, dataset)
    docs = dataset.documents
    if args.n is not None:
        docs, _ = subsample(
            dataset, SplitSpec(train_pool_size=args.pool, train_size=args.n, seed=args.seed)
        )
    tconf = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        seed=args.seed,
        rollback=not args.no_rollback,
    )
    params, history = train(docs, config, tconf)
    best = min(history, key=lambda r: r.mean_loss)
    save_checkpoint(
        args.out,
        config,
        params,
        meta={"epoch": best.epoch, "loss": best.mean_loss, "seed": args.seed},
    )
    _write_json(
        args.out + ".history.json",
        {
            "selected_epoch": best.epoch,
            "epochs": [{"epoch": r.epoch, "mean_loss": r.mean_loss} for r in history],
        },
    )
    _write_manifest(args, argv, [args.out, args.out + ".history.json"])
    print(f"trained {len(docs)} docs for {len(history)} epochs; "
          f"kept epoch {best.epoch} (loss {best.mean_loss:.6f}) -> {args.out}")
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, argv: list[str]) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    dataset = read_dataset(args.data)
    result = predict(ckpt.params, ckpt.config, dataset.documents)
    labels = dataset.labels()
    score = auc(result, labels)
    payload = {
        "auc": score,
        "scores": [
            {"id": d.doc_id, "label": d.label, "score": float(s)}
            for d, s in zip(dataset.documents, result)
        ],
    }
    _write_json(args.out, payload)
    _write_manifest(args, argv, [args.out])
    print(json.dumps({"auc": score}))
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace, argv: list[str]) -> int:
    dataset = read_dataset(args.data)
    config = _model_config(args, dataset)
    tconf = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        lr=args.lr,
        rollback=not args.no_rollback,
    )
    n_values = [int(x) for x in args.n_values.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    result = run_experiment(
        dataset, n_values, seeds, config, tconf, pool_size=args.pool
    )
    _write_json(args.out, result.to_dict())
    table_path = args.out + ".table.txt"
    with open(table_path, "w", encoding="utf-8") as f:
        f.write(result.table_text())
    _write_manifest(args, argv, [args.out, table_path])
    print(result.table_text(), end="")
    return EXIT_OK


def _cmd_explain(args: argparse.Namespace, argv: list[str]) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    config = ckpt.config
    if args.saliency_layer is not None:
        config = replace(config, saliency_layer=args.saliency_layer).validate()
    dataset = read_dataset(args.data)
    docs = dataset.documents[: args.limit] if args.limit else dataset.documents

    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    reports = []
    for doc in docs:
        rep = explain(doc, ckpt.params, config, ratio=args.ratio)
        if rep.missing_texts:
            print(f"warning: doc {doc.doc_id} has no sentence texts; "
                  f"report carries indices only", file=sys.stderr)
        reports.append(rep)
        rep_path = os.path.join(args.out_dir, f"report_{doc.doc_id}.json")
        _write_json(rep_path, rep.to_dict())
        outputs.append(rep_path)

    by_id = {d.doc_id: d for d in docs}
    labels = args.labels.split(",") if args.labels else DEFAULT_LABELS
    conditions = ["highlight", "plain"] if args.condition == "both" else [args.condition]
    for cond in conditions:
        path = os.path.join(args.out_dir, f"bundle_{cond}.json")
        export_bundle(reports, by_id, cond, path, labels)
        outputs.append(path)
    _write_manifest(args, argv, outputs)
    print(f"wrote {len(reports)} reports and {len(conditions)} bundle(s) to {args.out_dir}")
    return EXIT_OK


def _cmd_replay(args: argparse.Namespace, argv: list[str]) -> int:
    with open(args.manifest, encoding="utf-8") as f:
        manifest = json.load(f)
    recorded = manifest.get("argv")
    if not isinstance(recorded, list) or not recorded:
        raise HbmError(f"{args.manifest}: manifest has no recorded argv")
    return main(recorded)


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=None,
                   help="max sentences per document (default: dataset max)")
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--heads", type=int, default=1)
    p.add_argument("--dropout", type=float, default=0.01)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--no-rollback", action="store_true",
                   help="keep the final epoch instead of the lowest-loss epoch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbm",
        description="Sentence-level hierarchical attention classifier over "
                    "precomputed sentence embeddings",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None,
                   help="subsample this many training documents from the pool")
    p.add_argument("--pool", type=int, default=200,
                   help="held-out training pool size used with --n")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train, manifest_key="out")

    p = sub.add_parser("eval", help="score a dataset with a checkpoint and report AUC")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval, manifest_key="out")

    p = sub.add_parser("experiment", help="AUC grid over training sizes and seeds")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-values", default="50,100,150,200")
    p.add_argument("--seeds", default=",".join(str(s) for s in range(10)))
    p.add_argument("--pool", type=int, default=200)
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_experiment, manifest_key="out")

    p = sub.add_parser("explain", help="write saliency reports and annotation bundles")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratio", type=float, default=DEFAULT_RATIO)
    p.add_argument("--condition", choices=["highlight", "plain", "both"], default="both")
    p.add_argument("--limit", type=int, default=None, help="explain only the first N documents")
    p.add_argument("--labels", default=None, help="comma-separated label options for the UI")
    p.add_argument("--saliency-layer", type=int, default=None)
    p.set_defaults(func=_cmd_explain, manifest_key="out_dir")

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=_cmd_replay, manifest_key=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    key = getattr(args, "manifest_key", None)
    args.manifest_anchor = getattr(args, key) if key else ""
    try:
        return args.func(args, argv)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (HbmError, FileNotFoundError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
