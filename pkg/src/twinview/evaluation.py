"""Cross-validated grid search, benchmark runs, sensitivity sweeps and reports."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _accel, mvrkm, tmvrkm
from .dataio import (
    MultiviewDataset,
    kfold,
    load_csv,
    load_multiview_csvs,
    prepare_split,
)
from .errors import (
    ConfigError,
    DegenerateClassError,
    ReportFormatError,
    SingularSystemError,
    TuningError,
    TwinviewError,
)
from .kernels import KernelSpec
from .stats import AccuracyTable, rank_models

MODEL_KINDS = ("tmvrkm", "mvrkm")
SCHEMA_VERSION = 1

DEFAULT_SIGMAS = tuple(2.0 ** p for p in range(-5, 6))
DEFAULT_PENALTIES = tuple(10.0 ** p for p in range(-5, 6))


@dataclass(frozen=True)
class GridSpec:
    sigma_grid: tuple = DEFAULT_SIGMAS
    eta_grid: tuple = DEFAULT_PENALTIES
    lambda_grid: tuple = DEFAULT_PENALTIES
    tie_eta: bool = True
    tie_lambda: bool = True

    def __post_init__(self):
        for name in ("sigma_grid", "eta_grid", "lambda_grid"):
            values = tuple(float(v) for v in getattr(self, name))
            if not values:
                raise ConfigError(f"{name} is empty")
            if not all(math.isfinite(v) and v > 0 for v in values):
                raise ConfigError(f"{name} values must be positive and finite")
            object.__setattr__(self, name, values)

    def to_dict(self) -> dict:
        return {
            "sigma": list(self.sigma_grid),
            "eta": list(self.eta_grid),
            "lambda": list(self.lambda_grid),
            "tie_eta": self.tie_eta,
            "tie_lambda": self.tie_lambda,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "GridSpec":
        d = d or {}
        unknown = set(d) - {"sigma", "eta", "lambda", "tie_eta", "tie_lambda"}
        if unknown:
            raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
        return cls(tuple(d.get("sigma", DEFAULT_SIGMAS)), tuple(d.get("eta", DEFAULT_PENALTIES)),
                   tuple(d.get("lambda", DEFAULT_PENALTIES)), bool(d.get("tie_eta", True)),
                   bool(d.get("tie_lambda", True)))


@dataclass(frozen=True)
class MvrkmParams:
    eta: float
    lam: float
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def to_dict(self) -> dict:
        return {"eta": self.eta, "lambda": self.lam, "kernel": self.kernel.to_dict()}


@dataclass
class CvResult:
    params: object
    mean_acc: float
    fold_accs: list
    evaluations: int = 0
    failed_configs: int = 0
    skipped_folds: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.size != truth.size:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} labels")
    if pred.size == 0:
        raise ValueError("accuracy of an empty prediction vector")
    return float(np.count_nonzero(pred == truth) / pred.size)


# ---------------------------------------------------------------------------
# model plumbing shared by grid search, refits and sweeps


def fit_model(kind: str, data: MultiviewDataset, params):
    if kind == "tmvrkm":
        return tmvrkm.fit_views(data.views, data.y, params)
    if kind == "mvrkm":
        return mvrkm.fit_mvrkm(data, params.eta, params.lam, params.kernel)
    raise ConfigError(f"unknown model kind {kind!r}")


def predict_model(kind: str, model, views: Sequence) -> np.ndarray:
    if kind == "tmvrkm":
        return tmvrkm.predict(model, views)
    if kind == "mvrkm":
        return mvrkm.predict_mvrkm(model, views)
    raise ConfigError(f"unknown model kind {kind!r}")


class _GramCache:
    """Per-view kernel bases over a fixed set of rows; RBF Grams rebuilt per sigma."""

    def __init__(self, left_views, right_views, kernel_kind: str):
        self.kind = kernel_kind
        if kernel_kind == "rbf":
            self.bases = [_accel.sqdist(X, Y) for X, Y in zip(left_views, right_views)]
        else:
            self.bases = [_accel.linear(X, Y) for X, Y in zip(left_views, right_views)]

    def summed(self, sigma: float) -> np.ndarray:
        if self.kind == "rbf":
            total = _accel.rbf_from_sqdist(self.bases[0], sigma)
            for D in self.bases[1:]:
                total += _accel.rbf_from_sqdist(D, sigma)
            return total
        total = self.bases[0].copy()
        for G in self.bases[1:]:
            total += G
        return total


def _ascending(values) -> list:
    return sorted(set(float(v) for v in values))


def _configs(kind: str, grid: GridSpec, kernel_kind: str, variant: str):
    """Yield ``(sigma, params)`` in tie-break order: sigma, then eta, then lambda, ascending."""
    sigmas = _ascending(grid.sigma_grid) if kernel_kind == "rbf" else [1.0]
    etas = _ascending(grid.eta_grid)
    lams = _ascending(grid.lambda_grid)
    for sigma in sigmas:
        spec = KernelSpec(kernel_kind, sigma)
        if kind == "mvrkm":
            for eta in etas:
                for lam in lams:
                    yield sigma, MvrkmParams(eta, lam, spec)
            continue
        eta_pairs = [(e, e) for e in etas] if grid.tie_eta else [(a, b) for a in etas for b in etas]
        lam_pairs = [(l, l) for l in lams] if grid.tie_lambda else [(a, b) for a in lams for b in lams]
        for e1, e2 in eta_pairs:
            for l1, l2 in lam_pairs:
                yield sigma, tmvrkm.TmvrkmParams(e1, e2, l1, l2, spec, variant)


def _fold_blocks(K: np.ndarray, y: np.ndarray, tr: np.ndarray, va: np.ndarray, kind: str):
    if kind == "tmvrkm":
        pos = tr[y[tr] == 1]
        neg = tr[y[tr] == -1]
        return (K[np.ix_(pos, pos)], K[np.ix_(pos, neg)], K[np.ix_(neg, neg)],
                K[np.ix_(va, pos)], K[np.ix_(va, neg)])
    return K[np.ix_(tr, tr)], y[tr], K[np.ix_(va, tr)]


def _fold_predict(blocks, kind: str, params, n_views: int) -> np.ndarray:
    if kind == "tmvrkm":
        Kaa, Kab, Kbb, Kxa, Kxb = blocks
        h1, _, h2, _ = tmvrkm.solve_from_grams(Kaa, Kab, Kbb, n_views, params)
        f1, f2 = tmvrkm.scores_from_grams(Kxa, Kxb, h1, h2, params)
        return tmvrkm.labels_from_scores(f1, f2)
    Ktr, ytr, Kva = blocks
    z, b = mvrkm.solve_from_gram(Ktr, ytr, n_views, params.eta, params.lam)
    return np.where(mvrkm.scores_from_gram(Kva, z, b, params.eta) >= 0, 1, -1)


def grid_search(train: MultiviewDataset, model_kind: str = "tmvrkm", grid: GridSpec | None = None,
                k: int = 5, seed: int = 0, variant: str = "derivation_consistent",
                kernel_kind: str = "rbf") -> CvResult:
    """Pick the grid point with the best mean k-fold accuracy.

    Folds are drawn once and shared by every configuration. A fold whose
    training complement lacks a class is skipped for all configurations; a
    configuration whose solve fails on any fold is discarded. Ties keep the
    first maximum in ascending (sigma, eta, lambda) order.
    """
    if model_kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {model_kind!r}")
    grid = grid or GridSpec()
    y = train.y
    n = train.n_samples
    folds = kfold(np.arange(n), k, seed)
    usable, skipped, notes = [], [], []
    for i, va in enumerate(folds):
        tr = np.concatenate([f for j, f in enumerate(folds) if j != i])
        if not ((y[tr] == 1).any() and (y[tr] == -1).any()):
            skipped.append(i)
            notes.append(f"fold {i} skipped: training complement has a single class")
            continue
        usable.append((tr, va))
    if not usable:
        raise TuningError("no usable folds: every training complement has a single class")

    cache = _GramCache(train.views, train.views, kernel_kind)
    best = None
    evaluations = failed = 0
    current_sigma, blocks = None, None
    for sigma, params in _configs(model_kind, grid, kernel_kind, variant):
        if sigma != current_sigma:
            K = cache.summed(sigma)
            blocks = [(_fold_blocks(K, y, tr, va, model_kind), y[va]) for tr, va in usable]
            current_sigma = sigma
        evaluations += 1
        try:
            accs = [accuracy(_fold_predict(b, model_kind, params, train.n_views), yv)
                    for b, yv in blocks]
        except (SingularSystemError, DegenerateClassError):
            failed += 1
            continue
        mean = float(np.mean(accs))
        if best is None or mean > best.mean_acc:
            best = CvResult(params, mean, accs)
    if best is None:
        raise TuningError(f"all {evaluations} grid configurations failed")
    best.evaluations = evaluations
    best.failed_configs = failed
    best.skipped_folds = skipped
    best.notes = notes
    return best


# ---------------------------------------------------------------------------
# benchmark configuration and report


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    path: str | None = None
    label_col: str | int | None = None
    native_views: tuple | None = None


@dataclass(frozen=True)
class BenchmarkConfig:
    datasets: tuple = ()
    models: tuple = MODEL_KINDS
    seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    variant: str = "derivation_consistent"
    kernel: str = "rbf"
    k: int = 5
    threshold: float = 0.95
    stratify: bool = False
    external: dict | None = None
    record_timings: bool = False

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "BenchmarkConfig":
        known = {"datasets", "models", "seed", "grids", "variant", "kernel", "k", "threshold",
                 "stratify", "external", "record_timings"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base = Path(base_dir) if base_dir is not None else None

        def resolve(p):
            if p is None:
                return None
            p = Path(p)
            return str(base / p) if base is not None and not p.is_absolute() else str(p)

        entries = []
        for i, ds in enumerate(d.get("datasets", [])):
            if not isinstance(ds, dict) or not (ds.get("path") or ds.get("native_views")):
                raise ConfigError(f"dataset entry {i} needs 'path' or 'native_views'")
            native = ds.get("native_views")
            name = ds.get("name") or Path(ds.get("path") or native[0]).stem
            entries.append(DatasetEntry(name, resolve(ds.get("path")), ds.get("label_col"),
                                        tuple(resolve(p) for p in native) if native else None))
        models = tuple(d.get("models", MODEL_KINDS))
        for m in models:
            if m not in MODEL_KINDS:
                raise ConfigError(f"unknown model {m!r}; expected one of {MODEL_KINDS}")
        variant = d.get("variant", "derivation_consistent")
        if variant not in tmvrkm.VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}")
        kernel = d.get("kernel", "rbf")
        KernelSpec(kernel, 1.0)
        external = d.get("external")
        if external is not None:
            if isinstance(external, str):
                external = {"path": external}
            external = {"path": resolve(external["path"]), "percent": external.get("percent")}
        return cls(tuple(entries), models, int(d.get("seed", 0)), GridSpec.from_dict(d.get("grids")),
                   variant, kernel, int(d.get("k", 5)), float(d.get("threshold", 0.95)),
                   bool(d.get("stratify", False)), external, bool(d.get("record_timings", False)))


def load_benchmark_config(path) -> BenchmarkConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return BenchmarkConfig.from_dict(raw, base_dir=path.parent)


@dataclass
class BenchmarkReport:
    """Per-dataset, per-model results of a benchmark run.

    ``datasets`` holds one dict per input dataset, in config order. A
    dataset that failed carries ``status="failed"`` and an ``error``
    message; a model that failed on an otherwise usable dataset has
    ``test_accuracy=None`` and an ``error``. ``external`` holds imported
    accuracy columns for models run elsewhere, kept as given.
    """

    models: list
    datasets: list = field(default_factory=list)
    seed: int = 0
    variant: str = "derivation_consistent"
    config: dict = field(default_factory=dict)
    external: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "variant": self.variant,
            "models": list(self.models),
            "config": self.config,
            "datasets": self.datasets,
            "external": self.external,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkReport":
        if not isinstance(d, dict):
            raise ReportFormatError("report must be a JSON object")
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ReportFormatError(f"unsupported report schema_version {version!r}")
        try:
            return cls(list(d["models"]), list(d["datasets"]), int(d["seed"]), d["variant"],
                       dict(d.get("config") or {}), d.get("external"), version)
        except (KeyError, TypeError, ValueError) as exc:
            raise ReportFormatError(f"malformed report: {exc}") from exc

    def accuracy_table(self) -> AccuracyTable:
        """Fractions, columns = external models then in-repo models; NaN marks absent cells."""
        ext = self.external or {}
        ext_models = list(ext.get("models", []))
        scale = 100.0 if ext.get("percent") else 1.0
        ext_rows = dict(zip(ext.get("datasets", []), ext.get("values", [])))
        names = [d["name"] for d in self.datasets]
        names += [n for n in ext.get("datasets", []) if n not in names]
        columns = ext_models + [m for m in self.models if m not in ext_models]
        by_name = {d["name"]: d for d in self.datasets}
        values = np.full((len(names), len(columns)), np.nan)
        for i, name in enumerate(names):
            row = ext_rows.get(name)
            for j, model in enumerate(ext_models):
                if row is not None and row[j] is not None:
                    values[i, j] = row[j] / scale
            entry = by_name.get(name)
            if entry is None:
                continue
            for j, model in enumerate(columns):
                res = entry.get("results", {}).get(model)
                if res is not None and res.get("test_accuracy") is not None:
                    values[i, j] = res["test_accuracy"]
        return AccuracyTable(values, tuple(columns), tuple(names))


def save_report(report: BenchmarkReport, path) -> None:
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def load_report(path) -> BenchmarkReport:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ReportFormatError(f"{path}: not a valid report ({exc})") from exc
    return BenchmarkReport.from_dict(raw)


def import_external_table(path, percent: bool | None = None) -> dict:
    """Accuracy columns produced outside this package, kept as typed."""
    table = AccuracyTable.from_csv(path, percent=percent)
    return {
        "models": list(table.model_names),
        "datasets": list(table.dataset_names),
        "percent": table.percent,
        "values": [[None if not math.isfinite(v) else float(v) for v in row] for row in table.values],
    }


def _load_entry(entry: DatasetEntry):
    if entry.native_views:
        return load_multiview_csvs(entry.native_views, entry.label_col, entry.name)
    return load_csv(entry.path, entry.label_col, entry.name)


def _params_dict(params) -> dict:
    return params.to_dict()


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    """Split, preprocess, tune, refit and score every dataset/model pair.

    The split uses ``config.seed``; CV folds use ``config.seed + 1``.
    Failures are recorded in the report and the run continues.
    """
    report = BenchmarkReport(
        models=list(config.models), seed=config.seed, variant=config.variant,
        config={
            "grids": config.grid.to_dict(),
            "kernel": config.kernel,
            "k": config.k,
            "threshold": config.threshold,
            "stratify": config.stratify,
        },
    )
    if config.external:
        report.external = import_external_table(config.external["path"], config.external.get("percent"))
    for entry in config.datasets:
        record = {"name": entry.name, "status": "ok", "error": None, "results": {}}
        report.datasets.append(record)
        try:
            data = _load_entry(entry)
            prepared = prepare_split(data, config.seed, config.threshold, config.stratify)
        except (TwinviewError, OSError) as exc:
            record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
            continue
        info = prepared.info
        record.update(n_train=info["n_train"], n_test=info["n_test"],
                      n_views=prepared.train.n_views, pca_rank=info.get("pca_rank"))
        for kind in config.models:
            record["results"][kind] = _run_model(kind, prepared, config)
        if all(r.get("test_accuracy") is None for r in record["results"].values()) and config.models:
            record.update(status="failed", error="every model failed")
    return report


def _run_model(kind: str, prepared, config: BenchmarkConfig) -> dict:
    t0 = time.perf_counter()
    try:
        cv = grid_search(prepared.train, kind, config.grid, config.k, config.seed + 1,
                         config.variant, config.kernel)
        model = fit_model(kind, prepared.train, cv.params)
        pred = predict_model(kind, model, prepared.test.views)
    except TwinviewError as exc:
        return {"test_accuracy": None, "error": f"{type(exc).__name__}: {exc}"}
    result = {
        "test_accuracy": accuracy(pred, prepared.test.y),
        "cv_mean": cv.mean_acc,
        "cv_folds": cv.fold_accs,
        "params": _params_dict(cv.params),
        "evaluations": cv.evaluations,
        "failed_configs": cv.failed_configs,
        "notes": cv.notes,
    }
    if config.record_timings:
        result["seconds"] = time.perf_counter() - t0
    return result


def format_report_table(report: BenchmarkReport) -> str:
    """Accuracy table in percent with Average Acc and Average Rank footer rows."""
    table = report.accuracy_table()
    cols = table.model_names
    names = table.dataset_names
    width = max([len("Average Rank")] + [len(n) for n in names]) + 2
    cw = max(9, *(len(c) + 2 for c in cols)) if cols else 9
    lines = [f"{'Dataset':<{width}}" + "".join(f"{c:>{cw}}" for c in cols)]
    lines.append("-" * len(lines[0]))
    for name, row in zip(names, table.values):
        cells = "".join(f"{'--':>{cw}}" if not np.isfinite(v) else f"{100 * v:>{cw}.2f}" for v in row)
        lines.append(f"{name:<{width}}" + cells)
    lines.append("-" * len(lines[0]))
    if len(names):
        with np.errstate(invalid="ignore"):
            means = np.nanmean(np.where(np.isfinite(table.values), table.values, np.nan), axis=0) \
                if np.isfinite(table.values).any() else np.full(len(cols), np.nan)
        lines.append(f"{'Average Acc':<{width}}" +
                     "".join(f"{'--':>{cw}}" if not np.isfinite(m) else f"{100 * m:>{cw}.2f}" for m in means))
    complete = np.all(np.isfinite(table.values), axis=1) if len(names) else np.zeros(0, bool)
    if complete.sum() >= 2 and len(cols) >= 2:
        sub = AccuracyTable(table.values[complete], cols, tuple(np.array(names)[complete]))
        ranks = rank_models(sub).avg_ranks
        lines.append(f"{'Average Rank':<{width}}" + "".join(f"{r:>{cw}.2f}" for r in ranks))
        if complete.sum() < len(names):
            lines.append(f"(ranks over {int(complete.sum())} datasets with every model present)")
    else:
        lines.append(f"{'Average Rank':<{width}}" + "".join(f"{'--':>{cw}}" for _ in cols))
    for d in report.datasets:
        if d.get("status") == "failed":
            lines.append(f"failed: {d['name']}: {d.get('error')}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# sensitivity sweep


def sensitivity_sweep(train: MultiviewDataset, test: MultiviewDataset, eta_grid: Sequence,
                      sigma_grid: Sequence, lambda_fixed: float = 1.0,
                      variant: str = "derivation_consistent") -> np.ndarray:
    """Test accuracy for every (eta, sigma) pair with eta1 = eta2 and fixed lambda; NaN on failure."""
    eta_grid = [float(e) for e in eta_grid]
    sigma_grid = [float(s) for s in sigma_grid]
    if not eta_grid or not sigma_grid:
        raise ConfigError("sweep grids must be nonempty")
    if len(test.views) != len(train.views):
        raise ConfigError("train and test view counts differ")
    y = train.y
    pos = np.nonzero(y == 1)[0]
    neg = np.nonzero(y == -1)[0]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateClassError("training data contains a single class")
    train_cache = _GramCache(train.views, train.views, "rbf")
    test_cache = _GramCache(test.views, train.views, "rbf")
    out = np.full((len(eta_grid), len(sigma_grid)), np.nan)
    for j, sigma in enumerate(sigma_grid):
        K = train_cache.summed(sigma)
        Kt = test_cache.summed(sigma)
        blocks = (K[np.ix_(pos, pos)], K[np.ix_(pos, neg)], K[np.ix_(neg, neg)], Kt[:, pos], Kt[:, neg])
        for i, eta in enumerate(eta_grid):
            params = tmvrkm.TmvrkmParams.tied(eta, lambda_fixed, KernelSpec.rbf(sigma), variant)
            try:
                pred = _fold_predict(blocks, "tmvrkm", params, train.n_views)
            except SingularSystemError:
                continue
            out[i, j] = accuracy(pred, test.y)
    return out


def write_sweep_csv(path, eta_grid, sigma_grid, grid: np.ndarray) -> None:
    """Header row of sigma values, first column of eta values, ``NA`` for failed cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eta\\sigma", *(repr(float(s)) for s in sigma_grid)])
        for eta, row in zip(eta_grid, grid):
            w.writerow([repr(float(eta)), *("NA" if not np.isfinite(v) else repr(float(v)) for v in row)])


def read_sweep_csv(path):
    """Inverse of :func:`write_sweep_csv`: ``(eta_grid, sigma_grid, grid)``."""
    table = AccuracyTable.from_csv(path, percent=False)
    return ([float(e) for e in table.dataset_names], [float(s) for s in table.model_names],
            table.values)
