"""Single-system multiview RKM classifier used as the in-repo baseline.

With ``z = y * h`` the fitted state solves

    [(1/eta) sum_v Phi_v + lam I   V 1] [z]   [V y]
    [V 1^T                          0 ] [b] = [ 0 ]

where ``Phi_v`` is the training Gram matrix of view ``v``. The unknowns are
ordered with the positive-definite block first so the shared bordered solver
applies. Scores are ``(1/eta) sum_v K(x_v, X_v) z + b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateClassError, ModelFormatError, ViewMismatchError
from .kernels import BorderedSystem, KernelSpec, check_views, multiview_gram, solve_bordered


@dataclass(frozen=True)
class MvrkmModel:
    z: np.ndarray
    b: float
    train_views: tuple
    labels: np.ndarray
    eta: float
    lam: float
    kernel: KernelSpec

    @property
    def n_views(self) -> int:
        return len(self.train_views)

    def to_dict(self) -> dict:
        return {
            "model_type": "mvrkm",
            "kernel": self.kernel.to_dict(),
            "eta": self.eta,
            "lambda": self.lam,
            "z": self.z.tolist(),
            "b": self.b,
            "train_views": [X.tolist() for X in self.train_views],
            "labels": [int(v) for v in self.labels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MvrkmModel":
        if d.get("model_type") != "mvrkm":
            raise ModelFormatError(f"expected an mvrkm model, got {d.get('model_type')!r}")
        try:
            views = tuple(np.array(X, dtype=float) for X in d["train_views"])
            n = check_views(views)
            model = cls(np.array(d["z"], dtype=float), float(d["b"]), views,
                        np.array(d["labels"], dtype=int), float(d["eta"]), float(d["lambda"]),
                        KernelSpec.from_dict(d["kernel"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed mvrkm model document: {exc}") from exc
        if model.z.shape != (n,) or model.labels.shape != (n,):
            raise ModelFormatError("coefficient length does not match the stored samples")
        return model


def assemble_system(K_sum: np.ndarray, y: np.ndarray, n_views: int, eta: float,
                    lam: float) -> BorderedSystem:
    n = y.size
    V = float(n_views)
    core = K_sum / eta + lam * np.eye(n)
    return BorderedSystem(core, np.full(n, V), V * y.astype(float), 0.0)


def _check_params(eta: float, lam: float) -> None:
    for name, value in (("eta", eta), ("lambda", lam)):
        if not (np.isfinite(value) and value > 0):
            raise ConfigError(f"{name} must be a positive finite number, got {value!r}")


def _check_labels(y: np.ndarray) -> None:
    if y.size < 2:
        raise DegenerateClassError("at least two training samples are required")
    if not np.all((y == 1) | (y == -1)):
        raise ConfigError("labels must be +1 or -1")
    if not ((y == 1).any() and (y == -1).any()):
        raise DegenerateClassError("training data contains a single class")


def solve_from_gram(K_sum: np.ndarray, y: np.ndarray, n_views: int, eta: float,
                    lam: float) -> tuple[np.ndarray, float]:
    """``(z, b)`` from a precomputed view-summed training Gram."""
    return solve_bordered(assemble_system(K_sum, y, n_views, eta, lam))


def fit_mvrkm(data, eta: float, lam: float, kernel: KernelSpec) -> MvrkmModel:
    """Fit on a :class:`~twinview.dataio.MultiviewDataset` (anything with ``views`` and ``y``)."""
    eta, lam = float(eta), float(lam)
    _check_params(eta, lam)
    views = tuple(np.asarray(X, dtype=float) for X in data.views)
    n = check_views(views)
    y = np.asarray(data.y).ravel().astype(int)
    if y.size != n:
        raise ViewMismatchError(f"{y.size} labels for {n} samples")
    _check_labels(y)
    K_sum = multiview_gram(views, views, kernel)
    z, b = solve_from_gram(K_sum, y, len(views), eta, lam)
    return MvrkmModel(z, b, views, y, eta, lam, kernel)


def scores_from_gram(K_query: np.ndarray, z: np.ndarray, b: float, eta: float) -> np.ndarray:
    return K_query @ z / eta + b


def decision_function(model: MvrkmModel, X_views: Sequence) -> np.ndarray:
    if len(X_views) != model.n_views:
        raise ViewMismatchError(f"model expects {model.n_views} views, got {len(X_views)}")
    X_views = [np.atleast_2d(np.asarray(X, dtype=float)) for X in X_views]
    check_views(X_views, "query views")
    for v, (X, T) in enumerate(zip(X_views, model.train_views)):
        if X.shape[1] != T.shape[1]:
            raise ViewMismatchError(f"view {v}: expected {T.shape[1]} features, got {X.shape[1]}")
    K = multiview_gram(X_views, model.train_views, model.kernel)
    return scores_from_gram(K, model.z, model.b, model.eta)


def predict_mvrkm(model: MvrkmModel, X_views: Sequence) -> np.ndarray:
    return np.where(decision_function(model, X_views) >= 0, 1, -1)
