"""Command-line entry point.

Commands: `data inspect`, `train`, `eval`, `knn`, `gradcheck`. The dataset
root comes from --data-dir or the HAR_DATA_DIR environment variable. Exit
codes: 0 success, 1 usage error, 2 data error, 3 numeric failure (training
divergence or a failed gradient check). All file outputs are atomic.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import data as har_data
from . import knn as knn_mod
from . import metrics as metrics_mod
from . import models
from . import training
from .errors import DataError, NumericError
from .fileio import write_text_atomic
from .nn import gradcheck

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; this project uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="harnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_data_dir(p):
        p.add_argument("--data-dir", default=os.environ.get("HAR_DATA_DIR"),
                       help="UCI HAR dataset root (default: $HAR_DATA_DIR)")

    p_data = sub.add_parser("data", help="dataset utilities")
    data_sub = p_data.add_subparsers(dest="data_command", required=True, parser_class=_Parser)
    p_inspect = data_sub.add_parser("inspect", help="split summary and channel histograms")
    add_data_dir(p_inspect)
    p_inspect.add_argument("--bins", type=int, default=50)
    p_inspect.add_argument("--out-dir", default="inspect",
                           help="directory for per-channel histogram CSVs")

    p_train = sub.add_parser("train", help="train a CNN-LSTM model")
    add_data_dir(p_train)
    p_train.add_argument("--arch", choices=("single", "multi"), default="multi")
    p_train.add_argument("--epochs", type=int, default=17)
    p_train.add_argument("--batch", type=int, default=32)
    p_train.add_argument("--lr", type=float, default=0.001)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--checkpoint-out", default="checkpoint.json")
    p_train.add_argument("--history-out", default="history.csv")
    p_train.add_argument("--filters-reversed", action="store_true",
                         help="build the 32->512 filter reading instead of the default 512->32")
    p_train.add_argument("--limit-train", type=int, default=None, metavar="N",
                         help="train on a seeded N-window subset (CI smoke profile)")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    add_data_dir(p_eval)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--report-out", default="report.json")
    p_eval.add_argument("--confusion-out", default="confusion.csv")

    p_knn = sub.add_parser("knn", help="KNN baseline on the engineered features")
    add_data_dir(p_knn)
    p_knn.add_argument("--k", type=int, default=10)
    p_knn.add_argument("--sweep", metavar="LO:HI", default=None,
                       help="emit the error-vs-k curve instead of a single report")
    p_knn.add_argument("--report-out", default=None)
    p_knn.add_argument("--confusion-out", default=None)
    p_knn.add_argument("--sweep-out", default="knn_sweep.csv")

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p_grad.add_argument("--seed", type=int, default=0)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "data":
            return cmd_data_inspect(parser, args)
        if args.command == "train":
            return cmd_train(parser, args)
        if args.command == "eval":
            return cmd_eval(parser, args)
        if args.command == "knn":
            return cmd_knn(parser, args)
        if args.command == "gradcheck":
            return cmd_gradcheck(args)
        raise AssertionError(f"unhandled command {args.command}")
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"harnn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"harnn: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _data_dir(parser, args) -> Path:
    if not args.data_dir:
        parser.error("--data-dir is required (or set HAR_DATA_DIR)")
    path = Path(args.data_dir)
    if not path.is_dir():
        raise DataError(f"dataset directory not found: {path}")
    return path


def _load_standardized(data_dir: Path):
    train = har_data.load_split(data_dir, "train")
    test = har_data.load_split(data_dir, "test")
    stats = har_data.fit_standardizer(train.signals)
    x_train = har_data.apply_standardizer(train.signals, stats)
    x_test = har_data.apply_standardizer(test.signals, stats)
    return train, test, x_train, x_test


def cmd_data_inspect(parser, args) -> int:
    if args.bins < 2:
        parser.error(f"--bins must be >= 2, got {args.bins}")
    data_dir = _data_dir(parser, args)
    train, test, x_train, _ = _load_standardized(data_dir)
    out_dir = Path(args.out_dir)
    for c, name in enumerate(har_data.CHANNEL_NAMES):
        edges, counts = har_data.channel_histogram(x_train, c, args.bins)
        write_text_atomic(out_dir / f"hist_train_{name}.csv",
                          har_data.histogram_csv(edges, counts))
    print(f"train windows: {len(train)}")
    print(f"test windows: {len(test)}")
    for split_name, split in (("train", train), ("test", test)):
        counts = split.labels.onehot.sum(axis=0).astype(int)
        dist = ", ".join(f"{n}={c}" for n, c in zip(split.class_names, counts))
        print(f"{split_name} class distribution: {dist}")
    print("standardized train channels (mean, std, skewness):")
    for c, name in enumerate(har_data.CHANNEL_NAMES):
        vals = x_train[..., c]
        skew = har_data.channel_skewness(x_train, c)
        print(f"  {name}: mean={vals.mean():+.2e} std={vals.std():.6f} skew={skew:+.4f}")
    print(f"histogram CSVs written to {out_dir}/")
    return EXIT_OK


def cmd_train(parser, args) -> int:
    if args.epochs < 1:
        parser.error(f"--epochs must be >= 1, got {args.epochs}")
    if args.batch < 1:
        parser.error(f"--batch must be >= 1, got {args.batch}")
    data_dir = _data_dir(parser, args)
    train_split, test_split, x_train, x_test = _load_standardized(data_dir)
    y_train = train_split.labels.onehot
    y_test = test_split.labels.onehot
    if args.limit_train is not None:
        if not 1 <= args.limit_train <= len(train_split):
            parser.error(f"--limit-train must be in 1..{len(train_split)}")
        subset = np.random.default_rng(args.seed).permutation(len(train_split))
        subset = np.sort(subset[: args.limit_train])
        x_train, y_train = x_train[subset], y_train[subset]

    filters = tuple(reversed(models.DEFAULT_FILTERS)) if args.filters_reversed \
        else models.DEFAULT_FILTERS
    builder = models.build_multi_head if args.arch == "multi" else models.build_single_head
    model = builder(seed=args.seed, filters=filters)
    config = training.TrainConfig(epochs=args.epochs, batch_size=args.batch,
                                  lr=args.lr, seed=args.seed)

    def progress(record):
        print(f"epoch {record.epoch}/{config.epochs} "
              f"train_loss={record.train_loss:.4f} train_acc={record.train_acc:.4f} "
              f"test_loss={record.test_loss:.4f} test_acc={record.test_acc:.4f}",
              flush=True)

    model, history = training.train(model, (x_train, y_train), (x_test, y_test),
                                    config, on_epoch=progress)
    training.write_history(history, args.history_out)
    training.save_checkpoint(model, args.checkpoint_out)
    print(f"history written to {args.history_out}")
    print(f"checkpoint written to {args.checkpoint_out}")
    print(f"final test accuracy: {history[-1].test_acc:.6f}")
    return EXIT_OK


def cmd_eval(parser, args) -> int:
    data_dir = _data_dir(parser, args)
    model = training.load_checkpoint(args.checkpoint)
    _, test_split, _, x_test = _load_standardized(data_dir)
    loss, acc, preds = training.evaluate(model, (x_test, test_split.labels.onehot))
    cm = metrics_mod.confusion(preds, test_split.labels.indices, test_split.class_names)
    report = metrics_mod.classification_report(cm)
    write_text_atomic(args.report_out, metrics_mod.report_json(report))
    write_text_atomic(args.confusion_out, metrics_mod.confusion_csv(cm))
    print(f"report written to {args.report_out}")
    print(f"confusion matrix written to {args.confusion_out}")
    print(f"test loss: {loss:.6f}")
    print(f"test accuracy: {acc:.6f}")
    return EXIT_OK


def _parse_sweep(parser, text: str):
    parts = text.split(":")
    if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
        parser.error(f"--sweep expects LO:HI, got '{text}'")
    lo, hi = int(parts[0]), int(parts[1])
    if lo < 1 or hi < lo:
        parser.error(f"--sweep range must satisfy 1 <= LO <= HI, got {lo}:{hi}")
    return range(lo, hi + 1)


def cmd_knn(parser, args) -> int:
    sweep = _parse_sweep(parser, args.sweep) if args.sweep is not None else None
    data_dir = _data_dir(parser, args)
    train = har_data.load_split(data_dir, "train", with_features=True)
    test = har_data.load_split(data_dir, "test", with_features=True)
    train_x = train.features.features
    test_x = test.features.features
    train_y = train.labels.indices
    test_y = test.labels.indices

    if sweep is not None:
        if sweep.stop - 1 > train_x.shape[0]:
            parser.error(f"--sweep upper bound exceeds training size {train_x.shape[0]}")
        rows = knn_mod.knn_error_sweep(train_x, train_y, test_x, test_y, sweep)
        write_text_atomic(args.sweep_out, knn_mod.sweep_csv(rows))
        best_k, best_err = min(rows, key=lambda r: (r[1], r[0]))
        print(f"sweep written to {args.sweep_out}")
        print(f"best k: {best_k} (error {best_err:.6f})")
        return EXIT_OK

    if not 1 <= args.k <= train_x.shape[0]:
        parser.error(f"--k must be in 1..{train_x.shape[0]}, got {args.k}")
    model = knn_mod.KnnModel(train_x, train_y, k=args.k)
    preds = knn_mod.knn_predict_batch(model, test_x)
    cm = metrics_mod.confusion(preds, test_y, test.class_names)
    report = metrics_mod.classification_report(cm)
    if args.report_out:
        write_text_atomic(args.report_out, metrics_mod.report_json(report))
        print(f"report written to {args.report_out}")
    if args.confusion_out:
        write_text_atomic(args.confusion_out, metrics_mod.confusion_csv(cm))
        print(f"confusion matrix written to {args.confusion_out}")
    w = report["weighted"]
    print(f"k={args.k} accuracy: {report['accuracy']:.6f}")
    print(f"weighted precision/recall/f1: "
          f"{w['precision']:.4f}/{w['recall']:.4f}/{w['f1']:.4f}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    reports = gradcheck.run_all(seed=args.seed)
    all_ok = True
    print(f"{'kind':<12} {'max_rel_err':>12} {'tolerance':>10}  status")
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        all_ok &= rep.passed
        print(f"{rep.kind:<12} {rep.max_error:>12.3e} {rep.tolerance:>10.0e}  {status}")
    if not all_ok:
        print("gradcheck: at least one layer failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
