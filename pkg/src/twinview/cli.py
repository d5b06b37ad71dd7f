"""Command-line entry point: ``twinview <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import mvrkm, tmvrkm
from .dataio import load_csv, prepare_bundles, read_bundle, read_bundle_views
from .errors import (
    ConfigError,
    IngestError,
    ModelFormatError,
    ReportFormatError,
    SingularSystemError,
    StatsError,
    TuningError,
    TwinviewError,
    ViewMismatchError,
)
from .evaluation import (
    DEFAULT_PENALTIES,
    DEFAULT_SIGMAS,
    MvrkmParams,
    accuracy,
    fit_model,
    format_report_table,
    load_benchmark_config,
    load_report,
    predict_model,
    run_benchmark,
    save_report,
    sensitivity_sweep,
    write_sweep_csv,
)
from .kernels import KernelSpec
from .stats import DEFAULT_Q_ALPHA, AccuracyTable, compare, format_comparison

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twinview", description="Twin multiview restricted kernel machines.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="split a CSV 70:30 and synthesize a PCA second view")
    p.add_argument("--input", required=True, help="labelled CSV (label column last by default)")
    p.add_argument("--out", required=True, help="output directory for train/, test/ and manifest.json")
    p.add_argument("--threshold", type=float, default=0.95, help="cumulative explained-variance ratio kept by PCA")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--label-col", default=None, help="label column name (default: last column)")
    p.add_argument("--stratify", action="store_true", help="stratify the split by label")

    p = sub.add_parser("fit", help="fit a model on a prepared bundle")
    p.add_argument("--data", required=True, help="bundle directory (view_*.csv, labels.csv)")
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--model-type", choices=("tmvrkm", "mvrkm"), default="tmvrkm")
    p.add_argument("--kernel", choices=("rbf", "linear"), default="rbf")
    p.add_argument("--sigma", type=float, default=1.0, help="RBF bandwidth")
    p.add_argument("--eta", type=float, default=1.0, help="eta (eta1 = eta2 unless --eta2 is given)")
    p.add_argument("--eta2", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="lambda (lambda1 = lambda2 unless --lambda2 is given)")
    p.add_argument("--lambda2", dest="lam2", type=float, default=None)
    p.add_argument("--variant", choices=tmvrkm.VARIANTS, default="derivation_consistent")

    p = sub.add_parser("predict", help="predict labels for a bundle with a saved model")
    p.add_argument("--model", required=True, help="model JSON written by 'fit'")
    p.add_argument("--data", required=True, help="bundle directory")
    p.add_argument("--out", default=None, help="label CSV to write (default: standard output)")

    p = sub.add_parser("benchmark", help="run the grid-searched benchmark described by a config")
    p.add_argument("--config", required=True, help="benchmark config JSON")
    p.add_argument("--out", required=True, help="report JSON")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")

    p = sub.add_parser("sweep", help="eta x sigma test-accuracy grid for TMvRKM")
    p.add_argument("--train", required=True, help="training bundle directory")
    p.add_argument("--test", required=True, help="test bundle directory")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="fixed lambda1 = lambda2")
    p.add_argument("--eta-grid", type=_floats, default=list(DEFAULT_PENALTIES))
    p.add_argument("--sigma-grid", type=_floats, default=list(DEFAULT_SIGMAS))
    p.add_argument("--variant", choices=tmvrkm.VARIANTS, default="derivation_consistent")
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("stats", help="Friedman / Nemenyi comparison of an accuracy table")
    p.add_argument("--table", required=True, help="CSV: header of model names, one row per dataset")
    p.add_argument("--qalpha", type=float, default=DEFAULT_Q_ALPHA, help="Nemenyi critical value q_alpha")
    p.add_argument("--rank-decimals", type=int, default=None,
                   help="round average ranks to this many decimals before the tests (default: exact)")
    scale = p.add_mutually_exclusive_group()
    scale.add_argument("--percent", dest="percent", action="store_const", const=True, default=None,
                       help="values are percentages")
    scale.add_argument("--fraction", dest="percent", action="store_const", const=False,
                       help="values are fractions")

    p = sub.add_parser("report", help="print a saved benchmark report")
    p.add_argument("--report", required=True, help="report JSON written by 'benchmark'")
    p.add_argument("--qalpha", type=float, default=DEFAULT_Q_ALPHA)
    return parser


# ---------------------------------------------------------------------------


def cmd_prepare(args) -> int:
    data = load_csv(args.input, args.label_col)
    manifest = prepare_bundles(data, args.out, args.seed, args.threshold, args.stratify)
    print(f"prepared {manifest['dataset']}: {manifest['n_train']} train / {manifest['n_test']} test, "
          f"PCA rank {manifest['pca_rank']} -> {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = read_bundle(args.data)
    spec = KernelSpec(args.kernel, args.sigma)
    if args.model_type == "tmvrkm":
        params = tmvrkm.TmvrkmParams(args.eta, args.eta2 if args.eta2 is not None else args.eta,
                                     args.lam, args.lam2 if args.lam2 is not None else args.lam,
                                     spec, args.variant)
    else:
        params = MvrkmParams(args.eta, args.lam, spec)
    model = fit_model(args.model_type, data, params)
    with open(args.model, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)
        fh.write("\n")
    acc = accuracy(predict_model(args.model_type, model, data.views), data.y)
    print(f"training accuracy: {acc!r}")
    return EXIT_OK


def _load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a model file ({exc})") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: not a model file")
    kind = doc.get("model_type")
    if kind == "tmvrkm":
        return kind, tmvrkm.TmvrkmModel.from_dict(doc)
    if kind == "mvrkm":
        return kind, mvrkm.MvrkmModel.from_dict(doc)
    raise ModelFormatError(f"{path}: unknown model_type {kind!r}")


def cmd_predict(args) -> int:
    kind, model = _load_model(args.model)
    directory = Path(args.data)
    views = read_bundle_views(directory)
    pred = predict_model(kind, model, views)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["label"])
        for label in pred:
            w.writerow([int(label)])
    finally:
        if args.out:
            out.close()
    if (directory / "labels.csv").is_file():
        truth = read_bundle(directory).y
        print(f"accuracy: {accuracy(pred, truth)!r}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    config = load_benchmark_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    report = run_benchmark(config)
    save_report(report, args.out)
    print(format_report_table(report))
    if report.datasets and all(d["status"] == "failed" for d in report.datasets):
        print("every dataset failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args) -> int:
    train = read_bundle(args.train)
    test = read_bundle(args.test)
    grid = sensitivity_sweep(train, test, args.eta_grid, args.sigma_grid, args.lam, args.variant)
    write_sweep_csv(args.out, args.eta_grid, args.sigma_grid, grid)
    if np.all(np.isnan(grid)):
        print("every sweep cell failed", file=sys.stderr)
        return EXIT_NUMERIC
    best = np.nanmax(grid)
    print(f"sweep {grid.shape[0]}x{grid.shape[1]} written to {args.out}; best accuracy {best!r}")
    return EXIT_OK


def cmd_stats(args) -> int:
    table = AccuracyTable.from_csv(args.table, percent=args.percent)
    if len(table.model_names) < 2:
        raise UsageError("at least two model columns are required")
    if len(table.dataset_names) < 2:
        raise UsageError("at least two dataset rows are required")
    print(format_comparison(compare(table, args.qalpha, args.rank_decimals)))
    return EXIT_OK


def cmd_report(args) -> int:
    report = load_report(args.report)
    print(format_report_table(report))
    table = report.accuracy_table()
    complete = np.all(np.isfinite(table.values), axis=1)
    if complete.sum() >= 2 and len(table.model_names) >= 2:
        sub = AccuracyTable(table.values[complete], table.model_names,
                            tuple(np.array(table.dataset_names)[complete]))
        print()
        print(format_comparison(compare(sub, args.qalpha)))
    return EXIT_OK


COMMANDS = {
    "prepare": cmd_prepare,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
    "sweep": cmd_sweep,
    "stats": cmd_stats,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        print(f"twinview {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularSystemError, TuningError) as exc:
        print(f"twinview {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ViewMismatchError as exc:
        print(f"twinview {args.command}: ViewMismatch: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (IngestError, ReportFormatError, StatsError, TwinviewError, OSError) as exc:
        print(f"twinview {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
