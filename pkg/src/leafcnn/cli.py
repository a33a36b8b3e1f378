"""Command-line interface: synth, split, train, eval, compare.

Exit codes are stable: 0 success, 2 I/O failure, 3 configuration or
validation error, 4 numeric/runtime failure. Diagnostics go to stderr;
results go to files and stdout. Every subcommand is deterministic for
identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataset, imageio, metrics
from .config import load_run_config
from .errors import (
    ConfigError,
    InvalidShapeError,
    LeafcnnError,
    ManifestFormatError,
    MissingInputError,
    StorageError,
)
from .nn import build_preset, load_checkpoint, predict_batch, save_checkpoint, train
from .preprocess import PreprocessConfig, preprocess_pipeline


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage problems are configuration errors
        raise ConfigError(message)


def _load_preprocessed(
    manifest: dataset.DatasetManifest, config: PreprocessConfig
) -> tuple[np.ndarray, np.ndarray]:
    tensors = []
    for rec in manifest.records:
        if not Path(rec.path).is_file():
            raise MissingInputError(f"image not found: {rec.path}")
        tensors.append(preprocess_pipeline(imageio.load_image(rec.path), config))
    return np.stack(tensors), np.array(manifest.labels, dtype=np.int64)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def cmd_synth(args) -> int:
    spec = dataset.SyntheticSpec(
        num_classes=args.classes,
        images_per_class=args.per_class,
        height=args.height,
        width=args.width,
        seed=args.seed,
    )
    out = Path(args.out)
    manifest = dataset.generate_synthetic_corpus(spec, out)
    dataset.write_manifest(manifest, out / "manifest.csv")
    print(f"wrote {len(manifest.records)} images and {out / 'manifest.csv'}")
    return 0


def cmd_split(args) -> int:
    manifest = dataset.read_manifest(args.manifest)
    spec = dataset.SplitSpec(train_fraction=args.fraction, seed=args.seed)
    train_manifest, test_manifest = dataset.stratified_split(manifest, spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset.write_manifest(train_manifest, out / "train.csv")
    dataset.write_manifest(test_manifest, out / "test.csv")
    print(
        f"split {len(manifest.records)} records into "
        f"{len(train_manifest.records)} train / {len(test_manifest.records)} test"
    )
    return 0


def cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed))
    out = Path(args.out) if args.out else cfg.out_dir
    if out is None:
        raise ConfigError("no output directory: set out.dir in the config or pass --out")
    if cfg.train_manifest is None:
        raise ConfigError("config must set data.train_manifest")
    manifest = dataset.read_manifest(cfg.train_manifest)
    inputs, labels = _load_preprocessed(manifest, cfg.preprocess)
    model_config = build_preset(
        cfg.model_preset,
        input_shape=(cfg.preprocess.target_height, cfg.preprocess.target_width, 3),
        num_classes=manifest.num_classes,
        name=cfg.model_name,
    )
    checkpoint = train(model_config, inputs, labels, cfg.train)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(checkpoint, out / "checkpoint.ckpt")
    lines = ["epoch,loss,accuracy"]
    for epoch, (loss, acc) in enumerate(checkpoint.history, 1):
        lines.append(f"{epoch},{repr(loss)},{repr(acc)}")
    _write_text(out / "history.csv", "\n".join(lines) + "\n")
    final_acc = checkpoint.history[-1][1]
    print(f"final train accuracy: {final_acc:.4f}")
    print(f"checkpoint: {out / 'checkpoint.ckpt'}")
    return 0


def _read_injected_predictions(path: Path) -> tuple[list[int], list[int]]:
    if not path.is_file():
        raise MissingInputError(f"predictions file not found: {path}")
    truths, predictions = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, 1):
            if lineno == 1:
                if [c.strip() for c in row] != ["truth", "prediction"]:
                    raise ManifestFormatError(f"{path}:1: expected header 'truth,prediction'")
                continue
            if not row:
                continue
            if len(row) != 2:
                raise ManifestFormatError(f"{path}:{lineno}: expected 2 fields")
            try:
                truths.append(int(row[0]))
                predictions.append(int(row[1]))
            except ValueError:
                raise ManifestFormatError(f"{path}:{lineno}: non-integer label") from None
    if not truths:
        raise ManifestFormatError(f"{path}: no prediction rows")
    return truths, predictions


def cmd_eval(args) -> int:
    out = Path(args.out)
    if args.inject_predictions:
        truths, predictions = _read_injected_predictions(Path(args.inject_predictions))
        if args.classes:
            names = [n.strip() for n in args.classes.split(",") if n.strip()]
        elif args.manifest:
            names = dataset.read_manifest(args.manifest).class_names
        else:
            raise ConfigError("--inject-predictions needs --classes or --manifest for class names")
        k = len(names)
        matrix = metrics.confusion_matrix(truths, predictions, k)
        model_name = args.model_name or "model"
    else:
        if not args.checkpoint or not args.manifest:
            raise ConfigError("eval needs --checkpoint and --manifest (or --inject-predictions)")
        checkpoint = load_checkpoint(args.checkpoint)
        manifest = dataset.read_manifest(args.manifest)
        names = manifest.class_names
        if args.config:
            pre = load_run_config(args.config).preprocess
        else:
            h, w, _ = checkpoint.config.input_shape
            pre = PreprocessConfig(target_height=h, target_width=w)
        inputs, labels = _load_preprocessed(manifest, pre)
        if tuple(inputs.shape[1:]) != tuple(checkpoint.config.input_shape):
            raise InvalidShapeError(
                f"preprocessed shape {inputs.shape[1:]} does not match "
                f"checkpoint input {checkpoint.config.input_shape}"
            )
        if manifest.num_classes != checkpoint.config.num_classes:
            raise InvalidShapeError(
                f"manifest has {manifest.num_classes} classes, "
                f"checkpoint expects {checkpoint.config.num_classes}"
            )
        predictions, _ = predict_batch(checkpoint, inputs)
        matrix = metrics.confusion_matrix(labels, predictions, manifest.num_classes)
        model_name = args.model_name or checkpoint.config.name

    class_text, class_csv = metrics.per_class_report(matrix, names)
    summary = metrics.micro_aggregate(matrix)
    summary_text, summary_csv = metrics.render_summary(model_name, summary)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "confusion.txt", metrics.render_confusion(matrix, names))
    _write_text(out / "confusion.svg", metrics.render_confusion_svg(matrix, names))
    _write_text(out / "per_class_metrics.csv", class_csv)
    _write_text(out / "per_class_metrics.txt", class_text)
    _write_text(out / "summary.csv", summary_csv)
    _write_text(out / "summary.txt", summary_text)
    print(class_text)
    print(summary_text)
    return 0


def _read_summary_csv(path: Path) -> tuple[str, metrics.ModelSummary]:
    if not path.is_file():
        raise MissingInputError(f"summary file not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != metrics.SUMMARY_HEADER:
        raise ManifestFormatError(
            f"{path}: expected header {','.join(metrics.SUMMARY_HEADER)!r}"
        )
    if len(rows) < 2 or len(rows[1]) != len(metrics.SUMMARY_HEADER):
        raise ManifestFormatError(f"{path}: expected one summary row")
    row = rows[1]
    try:
        name = row[0]
        counts = metrics.BinaryCounts(tp=int(row[1]), tn=int(row[2]), fp=int(row[3]), fn=int(row[4]))
        multiclass = float(row[12]) / 100.0
    except ValueError:
        raise ManifestFormatError(f"{path}: non-numeric summary fields") from None
    return name, metrics.ModelSummary(
        counts=counts, metrics=metrics.class_metrics(counts), multiclass_accuracy=multiclass
    )


def cmd_compare(args) -> int:
    entries = [_read_summary_csv(Path(p)) for p in args.summaries]
    text, csv_text = metrics.compare_models(entries)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_text(out / "comparison.csv", csv_text)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="leafcnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic directory-per-class corpus")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=200)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="stratified train/test split of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for train.csv and test.csv")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model from a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override train.seed")
    p.add_argument("--out", default=None, help="override out.dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint (or injected predictions)")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--manifest", default=None, help="labeled test manifest")
    p.add_argument("--config", default=None, help="run config for preprocess settings")
    p.add_argument(
        "--inject-predictions",
        default=None,
        help="CSV of truth,prediction pairs evaluated instead of a checkpoint",
    )
    p.add_argument("--classes", default=None, help="comma-separated class names")
    p.add_argument("--model-name", default=None)
    p.add_argument("--out", required=True, help="output directory for tables")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="rank model summary CSVs")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--out", default=None, help="directory for comparison.csv")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except LeafcnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
