"""Dataset ingestion, scaling, PCA view synthesis, splitting and folds.

CSV files are UTF-8 with a header line, decimal-point numerics, and the label
column last unless another column is named. Labels must be +/-1, or 0/1 with
0 read as -1.

Prepared bundles are directories holding ``view_a.csv``, ``view_b.csv``, ...
(one per view, header ``x0,x1,...``) and ``labels.csv`` (header ``label``).
Numbers are written in shortest round-trip form so rereading is lossless.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError, IngestError, ViewMismatchError
from .rng import Xoshiro256

_STD_FLOOR = 1e-12
_RATIO_SLACK = 1e-10


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y).ravel()
        if X.ndim != 2:
            raise IngestError(f"{self.name}: feature matrix must be 2-D")
        if X.shape[0] != y.size:
            raise IngestError(f"{self.name}: {X.shape[0]} rows but {y.size} labels")
        if X.shape[0] < 2:
            raise IngestError(f"{self.name}: at least two samples are required")
        if not np.all(np.isfinite(X)):
            raise IngestError(f"{self.name}: non-finite feature values")
        if not np.all((y == 1) | (y == -1)):
            raise IngestError(f"{self.name}: labels must be +1 or -1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(int))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], self.name)


@dataclass(frozen=True)
class MultiviewDataset:
    views: tuple
    y: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        views = tuple(np.asarray(v, dtype=float) for v in self.views)
        y = np.asarray(self.y).ravel()
        if len(views) < 1:
            raise ViewMismatchError(f"{self.name}: at least one view is required")
        for v in views:
            if v.ndim != 2:
                raise ViewMismatchError(f"{self.name}: every view must be 2-D")
            if v.shape[0] != y.size:
                raise ViewMismatchError(
                    f"{self.name}: view with {v.shape[0]} rows does not match {y.size} labels")
        if not np.all((y == 1) | (y == -1)):
            raise IngestError(f"{self.name}: labels must be +1 or -1")
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "y", y.astype(int))

    @property
    def n_samples(self) -> int:
        return self.y.size

    @property
    def n_views(self) -> int:
        return len(self.views)

    def subset(self, idx) -> "MultiviewDataset":
        idx = np.asarray(idx, dtype=int)
        return MultiviewDataset(tuple(v[idx] for v in self.views), self.y[idx], self.name)


@dataclass(frozen=True)
class PcaTransform:
    mean: np.ndarray
    components: np.ndarray
    explained_ratio: np.ndarray

    @property
    def rank(self) -> int:
        return self.components.shape[0]

    def digest(self) -> str:
        """SHA-256 over the mean and component bytes; identifies the fitted transform."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.mean, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.components, dtype="<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int = 0


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_label(raw: str, lineno: int, path) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise IngestError(f"{path}: row {lineno}: label {raw!r} is not numeric") from None
    if value not in (-1.0, 0.0, 1.0):
        raise IngestError(f"{path}: row {lineno}: label {raw!r} is not in {{-1, 0, 1}}")
    return value


def _read_numeric_csv(path, label_column=None):
    """Return ``(header, features, labels_or_None)`` from a headed CSV."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        if label_column is None:
            label_idx = len(header) - 1
        elif label_column is False:
            label_idx = None
        elif isinstance(label_column, int):
            label_idx = label_column
        else:
            if label_column not in header:
                raise IngestError(f"{path}: no column named {label_column!r}")
            label_idx = header.index(label_column)
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestError(
                    f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}")
            feats = []
            for j, cell in enumerate(row):
                if j == label_idx:
                    labels.append(_parse_label(cell.strip(), lineno, path))
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise IngestError(f"{path}: row {lineno}: non-numeric cell {cell!r}") from None
                if not np.isfinite(value):
                    raise IngestError(f"{path}: row {lineno}: non-finite cell {cell!r}")
                feats.append(value)
            rows.append(feats)
    names = [h for j, h in enumerate(header) if j != label_idx]
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    y = None
    if label_idx is not None:
        raw = np.array(labels)
        if (raw == 0).any() and (raw == -1).any():
            raise IngestError(f"{path}: labels mix 0 and -1")
        y = np.where(raw == 0, -1, raw).astype(int)
    return names, X, y


def load_csv(path, label_column: str | int | None = None, name: str | None = None) -> Dataset:
    """Read a labelled CSV; the label column is the last one unless named."""
    _, X, y = _read_numeric_csv(path, label_column)
    return Dataset(X, y, name or Path(path).stem)


def load_multiview_csvs(paths: Sequence, label_column=None, name: str | None = None) -> MultiviewDataset:
    """One labelled CSV per view; rows must align and labels must agree."""
    if not paths:
        raise IngestError("no view files given")
    views, labels = [], None
    for p in paths:
        ds = load_csv(p, label_column)
        if labels is not None and not np.array_equal(labels, ds.y):
            raise IngestError(f"{p}: labels disagree with the first view file")
        labels = ds.y
        views.append(ds.X)
    return MultiviewDataset(tuple(views), labels, name or Path(paths[0]).stem)


# ---------------------------------------------------------------------------
# preprocessing


def standardize(train, test):
    """Z-score columns with train statistics; near-constant columns are only centered."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    if train.ndim != 2 or train.shape[0] == 0:
        raise DimensionError("train must be a non-empty 2-D matrix")
    if test.ndim != 2 or test.shape[1] != train.shape[1]:
        raise DimensionError("test must share the train column count")
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std < _STD_FLOOR, 1.0, std)
    return (train - mean) / std, (test - mean) / std, mean, std


def pca_fit(X, variance_threshold: float = 0.95) -> PcaTransform:
    """Keep the fewest leading components whose cumulative variance ratio reaches the threshold."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("X must be 2-D")
    if not np.all(np.isfinite(X)):
        raise IngestError("PCA input contains non-finite values")
    if X.shape[0] < 2:
        raise IngestError("PCA needs at least two samples")
    if not (0 < variance_threshold <= 1):
        raise ConfigError(f"variance threshold must lie in (0, 1], got {variance_threshold}")
    mean = X.mean(axis=0)
    _, s, Vt = np.linalg.svd(X - mean, full_matrices=False)
    var = s * s
    total = var.sum()
    ratio = var / total if total > 0 else np.zeros_like(var)
    cum = np.cumsum(ratio)
    hits = np.nonzero(cum >= variance_threshold - _RATIO_SLACK)[0]
    r = int(hits[0]) + 1 if hits.size else len(ratio)
    r = max(1, r)
    comps = Vt[:r].copy()
    # Deterministic orientation: largest-magnitude loading positive.
    pivots = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(r), pivots])
    signs[signs == 0] = 1.0
    comps *= signs[:, None]
    return PcaTransform(mean, comps, ratio[:r].copy())


def pca_apply(t: PcaTransform, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != t.mean.size:
        raise DimensionError(f"expected {t.mean.size} columns, got shape {X.shape}")
    return (X - t.mean) @ t.components.T


def make_second_view(train: Dataset, test: Dataset, threshold: float = 0.95,
                     return_transform: bool = False):
    """Two-view datasets: original features plus PCA scores fitted on train rows only."""
    if train.X.shape[1] != test.X.shape[1]:
        raise DimensionError("train and test feature counts differ")
    t = pca_fit(train.X, threshold)
    train_mv = MultiviewDataset((train.X, pca_apply(t, train.X)), train.y, train.name)
    test_mv = MultiviewDataset((test.X, pca_apply(t, test.X)), test.y, test.name)
    if return_transform:
        return train_mv, test_mv, t
    return train_mv, test_mv


# ---------------------------------------------------------------------------
# splitting


def train_size(n: int) -> int:
    """``round(0.7 n)`` with halves rounded up."""
    return (7 * n + 5) // 10


def split_70_30(n: int, seed: int, labels=None, stratify: bool = False) -> SplitPlan:
    """Random 70:30 split from the package's portable generator."""
    if n < 4:
        raise ConfigError(f"need at least 4 samples to split, got {n}")
    rng = Xoshiro256(seed)
    n_train = train_size(n)
    if not stratify:
        perm = rng.permutation(n)
        return SplitPlan(np.array(perm[:n_train], dtype=int),
                         np.array(perm[n_train:], dtype=int), seed)
    if labels is None:
        raise ConfigError("stratified split needs labels")
    labels = np.asarray(labels).ravel()
    classes = sorted(set(labels.tolist()))
    groups = {c: [int(i) for i in np.nonzero(labels == c)[0]] for c in classes}
    quota = {c: 0.7 * len(groups[c]) for c in classes}
    take = {c: int(np.floor(quota[c])) for c in classes}
    spare = n_train - sum(take.values())
    for c in sorted(classes, key=lambda c: (-(quota[c] - take[c]), c))[:spare]:
        take[c] += 1
    train, test = [], []
    for c in classes:
        members = groups[c]
        rng.shuffle(members)
        train += members[:take[c]]
        test += members[take[c]:]
    rng.shuffle(train)
    rng.shuffle(test)
    return SplitPlan(np.array(train, dtype=int), np.array(test, dtype=int), seed)


def kfold(indices, k: int = 5, seed: int = 0) -> list:
    """Shuffle ``indices`` and cut them into ``k`` folds whose sizes differ by at most one."""
    indices = list(np.asarray(indices, dtype=int).ravel())
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    if len(indices) < k:
        raise ConfigError(f"{len(indices)} samples cannot fill {k} folds")
    Xoshiro256(seed).shuffle(indices)
    q, r = divmod(len(indices), k)
    folds, start = [], 0
    for i in range(k):
        stop = start + q + (1 if i < r else 0)
        folds.append(np.array(indices[start:stop], dtype=int))
        start = stop
    return folds


# ---------------------------------------------------------------------------
# fixtures


def make_blobs(n: int = 200, seed: int = 0, offset: float = 2.0, spread: float = 1.0,
               name: str = "blobs") -> Dataset:
    """Two isotropic 2-D Gaussian blobs centred at +/-(offset, offset)."""
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    n_neg = n - n_pos
    pos = rng.normal(offset, spread, size=(n_pos, 2))
    neg = rng.normal(-offset, spread, size=(n_neg, 2))
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    order = rng.permutation(n)
    return Dataset(X[order], y[order], name)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class PreparedSplit:
    train: MultiviewDataset
    test: MultiviewDataset
    info: dict = field(default_factory=dict)


def prepare_split(data, seed: int, threshold: float = 0.95, stratify: bool = False) -> PreparedSplit:
    """Split, standardize with train statistics, then synthesize or keep views.

    ``data`` is a :class:`Dataset` (second view synthesized by PCA) or a
    :class:`MultiviewDataset` (views kept, each standardized separately).
    """
    plan = split_70_30(data.n_samples, seed, labels=data.y, stratify=stratify)
    info = {
        "seed": int(seed),
        "n_total": int(data.n_samples),
        "n_train": int(plan.train_indices.size),
        "n_test": int(plan.test_indices.size),
        "train_indices": plan.train_indices.tolist(),
        "test_indices": plan.test_indices.tolist(),
    }
    if isinstance(data, MultiviewDataset):
        tr_views, te_views = [], []
        for v in data.views:
            a, b, _, _ = standardize(v[plan.train_indices], v[plan.test_indices])
            tr_views.append(a)
            te_views.append(b)
        train = MultiviewDataset(tuple(tr_views), data.y[plan.train_indices], data.name)
        test = MultiviewDataset(tuple(te_views), data.y[plan.test_indices], data.name)
        info["native_views"] = True
        return PreparedSplit(train, test, info)

    Xtr, Xte, mean, std = standardize(data.X[plan.train_indices], data.X[plan.test_indices])
    train_ds = Dataset(Xtr, data.y[plan.train_indices], data.name)
    test_ds = Dataset(Xte, data.y[plan.test_indices], data.name)
    train, test, t = make_second_view(train_ds, test_ds, threshold, return_transform=True)
    info.update({
        "native_views": False,
        "threshold": float(threshold),
        "standardize_mean": mean.tolist(),
        "standardize_std": std.tolist(),
        "pca_rank": t.rank,
        "pca_explained_ratio": t.explained_ratio.tolist(),
        "pca_digest": t.digest(),
    })
    return PreparedSplit(train, test, info)


def _view_name(v: int) -> str:
    letters = string.ascii_lowercase
    return letters[v] if v < len(letters) else f"v{v}"


def _fmt(x: float) -> str:
    return repr(float(x))


def write_bundle(directory, data: MultiviewDataset) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for v, X in enumerate(data.views):
        with open(directory / f"view_{_view_name(v)}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{j}" for j in range(X.shape[1])])
            for row in X:
                w.writerow([_fmt(x) for x in row])
    with open(directory / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"])
        for label in data.y:
            w.writerow([int(label)])


def _bundle_view_files(directory: Path) -> list:
    files = [p for p in directory.glob("view_*.csv")]
    # view_a .. view_z, then view_v26 ..
    def key(p):
        tag = p.stem[len("view_"):]
        return (0, tag) if len(tag) == 1 else (1, int(tag[1:]) if tag[1:].isdigit() else 0, tag)
    return sorted(files, key=key)


def read_bundle_views(directory) -> list:
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"{directory}: not a bundle directory")
    files = _bundle_view_files(directory)
    if not files:
        raise IngestError(f"{directory}: no view_*.csv files")
    return [_read_numeric_csv(p, label_column=False)[1] for p in files]


def read_bundle(directory, name: str | None = None) -> MultiviewDataset:
    directory = Path(directory)
    views = read_bundle_views(directory)
    labels_path = directory / "labels.csv"
    if not labels_path.is_file():
        raise IngestError(f"{directory}: missing labels.csv")
    _, _, y = _read_numeric_csv(labels_path, label_column=0)
    try:
        return MultiviewDataset(tuple(views), y, name or directory.name)
    except ViewMismatchError as exc:
        raise IngestError(f"{directory}: {exc}") from exc


def prepare_bundles(data, out_dir, seed: int, threshold: float = 0.95,
                    stratify: bool = False) -> dict:
    """Write ``train/`` and ``test/`` bundles plus ``manifest.json``; return the manifest."""
    out_dir = Path(out_dir)
    prepared = prepare_split(data, seed, threshold, stratify)
    write_bundle(out_dir / "train", prepared.train)
    write_bundle(out_dir / "test", prepared.test)
    manifest = {"dataset": data.name, "n_views": prepared.train.n_views, **prepared.info}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def write_dataset_csv(path, data: Dataset) -> None:
    os.makedirs(Path(path).parent, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(data.X.shape[1])] + ["label"])
        for row, label in zip(data.X, data.y):
            w.writerow([_fmt(x) for x in row] + [int(label)])
