"""Twin multiview restricted kernel machine.

Two bordered systems are solved per model, one per class. The positive
system yields hidden vector ``h1`` and bias ``b1`` attached to the +1 class
samples ``A``; the negative one yields ``h2``/``b2`` for the -1 samples ``B``.
A test point is labelled by ``sign(f1 + f2)`` with

    f1(x) = (1/eta1) [sum_v K(x_v, A_v) h1 - sum_v K(x_v, B_v) 1]
    f2(x) = (1/eta2) [sum_v K(x_v, B_v) h2 + sum_v K(x_v, A_v) 1]

Two assemblies of the linear systems are provided:

``derivation_consistent`` (default)
    Follows the stationarity conditions of the two Lagrangians after
    substituting ``w_v = (A_v^T h1 - B_v^T 1) / eta1`` and
    ``u_v = -(A_v^T 1 + B_v^T h2) / eta2``. Only this variant can be checked
    with :func:`stationarity_check`.
``as_published``
    The alternative sign convention: right-hand side of the first system
    ``V 1 - (1/eta1) sum_v K(A_v, B_v) 1`` and a ``+V`` border in the second.

Both share one scalar bias per hyperplane, whose border coefficient is the
view count ``V``. The bias row is stored as ``V 1^T h = V m`` so that the
system stays symmetric; it is the same equation as ``1^T h = m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateClassError,
    ModelFormatError,
    UnsupportedCheckError,
    ViewMismatchError,
)
from .kernels import BorderedSystem, KernelSpec, check_views, multiview_gram, solve_bordered

VARIANTS = ("derivation_consistent", "as_published")


@dataclass(frozen=True)
class TmvrkmParams:
    eta1: float
    eta2: float
    lambda1: float
    lambda2: float
    kernel: KernelSpec = field(default_factory=KernelSpec)
    variant: str = "derivation_consistent"

    def __post_init__(self):
        for name in ("eta1", "eta2", "lambda1", "lambda2"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, value)
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @classmethod
    def tied(cls, eta: float, lam: float, kernel: KernelSpec | None = None,
             variant: str = "derivation_consistent") -> "TmvrkmParams":
        return cls(eta, eta, lam, lam, kernel or KernelSpec(), variant)

    def to_dict(self) -> dict:
        return {
            "eta1": self.eta1,
            "eta2": self.eta2,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "kernel": self.kernel.to_dict(),
            "variant": self.variant,
        }


@dataclass(frozen=True)
class ClassSplit:
    """Per-view sample matrices of the +1 class (``A_views``) and -1 class (``B_views``)."""

    A_views: tuple
    B_views: tuple

    def __post_init__(self):
        A = tuple(np.asarray(a, dtype=float) for a in self.A_views)
        B = tuple(np.asarray(b, dtype=float) for b in self.B_views)
        if len(A) != len(B):
            raise ViewMismatchError(f"class view counts differ: {len(A)} vs {len(B)}")
        if len(A) == 0:
            raise ViewMismatchError("at least one view is required")
        for a in A + B:
            if a.ndim != 2:
                raise ViewMismatchError("every view must be a 2-D matrix")
        m1 = check_views(A, "positive-class views")
        m2 = check_views(B, "negative-class views")
        if m1 < 1 or m2 < 1:
            raise DegenerateClassError(f"both classes need samples (m1={m1}, m2={m2})")
        for v, (a, b) in enumerate(zip(A, B)):
            if a.shape[1] != b.shape[1]:
                raise ViewMismatchError(f"view {v}: feature dimensions differ between classes")
        for a in A + B:
            a.setflags(write=False)
        object.__setattr__(self, "A_views", A)
        object.__setattr__(self, "B_views", B)

    @classmethod
    def from_labeled(cls, views: Sequence, y) -> "ClassSplit":
        """Split aligned views by a +/-1 label vector, keeping row order."""
        y = np.asarray(y).ravel()
        n = check_views([np.asarray(v) for v in views])
        if y.size != n:
            raise ViewMismatchError(f"{y.size} labels for {n} samples")
        pos = y == 1
        neg = y == -1
        if not np.all(pos | neg):
            raise ConfigError("labels must be +1 or -1")
        if not pos.any() or not neg.any():
            raise DegenerateClassError("training data contains a single class")
        return cls(tuple(np.asarray(v, float)[pos] for v in views),
                   tuple(np.asarray(v, float)[neg] for v in views))

    @property
    def n_views(self) -> int:
        return len(self.A_views)

    @property
    def m1(self) -> int:
        return self.A_views[0].shape[0]

    @property
    def m2(self) -> int:
        return self.B_views[0].shape[0]

    @property
    def view_dims(self) -> tuple:
        return tuple(a.shape[1] for a in self.A_views)


@dataclass(frozen=True)
class TmvrkmModel:
    h1: np.ndarray
    b1: float
    h2: np.ndarray
    b2: float
    split: ClassSplit
    params: TmvrkmParams

    def to_dict(self) -> dict:
        return {
            "model_type": "tmvrkm",
            "variant": self.params.variant,
            "kernel": self.params.kernel.to_dict(),
            "eta1": self.params.eta1,
            "eta2": self.params.eta2,
            "lambda1": self.params.lambda1,
            "lambda2": self.params.lambda2,
            "h1": self.h1.tolist(),
            "b1": self.b1,
            "h2": self.h2.tolist(),
            "b2": self.b2,
            "A_views": [a.tolist() for a in self.split.A_views],
            "B_views": [b.tolist() for b in self.split.B_views],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TmvrkmModel":
        if d.get("model_type", "tmvrkm") != "tmvrkm":
            raise ModelFormatError(f"expected a tmvrkm model, got {d.get('model_type')!r}")
        try:
            params = TmvrkmParams(d["eta1"], d["eta2"], d["lambda1"], d["lambda2"],
                                  KernelSpec.from_dict(d["kernel"]), d["variant"])
            split = ClassSplit(tuple(np.array(a, dtype=float) for a in d["A_views"]),
                               tuple(np.array(b, dtype=float) for b in d["B_views"]))
            h1 = np.array(d["h1"], dtype=float)
            h2 = np.array(d["h2"], dtype=float)
            b1 = float(d["b1"])
            b2 = float(d["b2"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed tmvrkm model document: {exc}") from exc
        if h1.shape != (split.m1,) or h2.shape != (split.m2,):
            raise ModelFormatError("hidden vector lengths do not match the stored class samples")
        return cls(h1, b1, h2, b2, split, params)


# ---------------------------------------------------------------------------
# assembly


def _positive_from_grams(Kaa: np.ndarray, Kab: np.ndarray, n_views: int,
                         params: TmvrkmParams) -> BorderedSystem:
    m1, m2 = Kab.shape
    V = float(n_views)
    core = Kaa / params.eta1 + params.lambda1 * np.eye(m1)
    coupling = Kab.sum(axis=1) / params.eta1
    if params.variant == "derivation_consistent":
        rhs = V + coupling
    else:
        rhs = V - coupling
    return BorderedSystem(core, np.full(m1, V), rhs, V * m2)


def _negative_from_grams(Kbb: np.ndarray, Kba: np.ndarray, n_views: int,
                         params: TmvrkmParams) -> BorderedSystem:
    m2, m1 = Kba.shape
    V = float(n_views)
    core = Kbb / params.eta2 + params.lambda2 * np.eye(m2)
    rhs = V - Kba.sum(axis=1) / params.eta2
    edge = -V if params.variant == "derivation_consistent" else V
    return BorderedSystem(core, np.full(m2, edge), rhs, edge * m1)


def assemble_positive_system(split: ClassSplit, params: TmvrkmParams) -> BorderedSystem:
    spec = params.kernel
    Kaa = multiview_gram(split.A_views, split.A_views, spec)
    Kab = multiview_gram(split.A_views, split.B_views, spec)
    return _positive_from_grams(Kaa, Kab, split.n_views, params)


def assemble_negative_system(split: ClassSplit, params: TmvrkmParams) -> BorderedSystem:
    spec = params.kernel
    Kbb = multiview_gram(split.B_views, split.B_views, spec)
    Kba = multiview_gram(split.B_views, split.A_views, spec)
    return _negative_from_grams(Kbb, Kba, split.n_views, params)


def solve_from_grams(Kaa, Kab, Kbb, n_views: int, params: TmvrkmParams):
    """Solve both systems from precomputed view-summed Grams.

    ``Kab`` is ``sum_v K(A_v, B_v)``; its transpose serves as ``sum_v K(B_v, A_v)``.
    Returns ``(h1, b1, h2, b2)``.
    """
    h1, b1 = solve_bordered(_positive_from_grams(Kaa, Kab, n_views, params))
    h2, b2 = solve_bordered(_negative_from_grams(Kbb, Kab.T, n_views, params))
    return h1, b1, h2, b2


def fit(split: ClassSplit, params: TmvrkmParams) -> TmvrkmModel:
    spec = params.kernel
    Kaa = multiview_gram(split.A_views, split.A_views, spec)
    Kab = multiview_gram(split.A_views, split.B_views, spec)
    Kbb = multiview_gram(split.B_views, split.B_views, spec)
    h1, b1, h2, b2 = solve_from_grams(Kaa, Kab, Kbb, split.n_views, params)
    return TmvrkmModel(h1, b1, h2, b2, split, params)


def fit_views(views: Sequence, y, params: TmvrkmParams) -> TmvrkmModel:
    return fit(ClassSplit.from_labeled(views, y), params)


# ---------------------------------------------------------------------------
# prediction


def scores_from_grams(Kxa, Kxb, h1, h2, params: TmvrkmParams):
    """``(f1, f2)`` arrays from ``sum_v K(x_v, A_v)`` and ``sum_v K(x_v, B_v)``."""
    f1 = (Kxa @ h1 - Kxb.sum(axis=1)) / params.eta1
    f2 = (Kxb @ h2 + Kxa.sum(axis=1)) / params.eta2
    return f1, f2


def labels_from_scores(f1, f2) -> np.ndarray:
    return np.where(np.asarray(f1) + np.asarray(f2) >= 0, 1, -1)


def _check_query(model: TmvrkmModel, X_views: Sequence) -> list:
    split = model.split
    if len(X_views) != split.n_views:
        raise ViewMismatchError(f"model expects {split.n_views} views, got {len(X_views)}")
    X_views = [np.atleast_2d(np.asarray(X, dtype=float)) for X in X_views]
    check_views(X_views, "query views")
    for v, (X, d) in enumerate(zip(X_views, split.view_dims)):
        if X.shape[1] != d:
            raise ViewMismatchError(f"view {v}: expected {d} features, got {X.shape[1]}")
    return X_views


def decision_function(model: TmvrkmModel, X_views: Sequence):
    """Vectorized ``(f1, f2)`` for every row of the query views."""
    X_views = _check_query(model, X_views)
    spec = model.params.kernel
    Kxa = multiview_gram(X_views, model.split.A_views, spec)
    Kxb = multiview_gram(X_views, model.split.B_views, spec)
    return scores_from_grams(Kxa, Kxb, model.h1, model.h2, model.params)


def decision_scores(model: TmvrkmModel, x_views: Sequence) -> tuple[float, float]:
    """``(f1, f2)`` for a single sample given as one vector per view."""
    rows = [np.asarray(x, dtype=float).reshape(1, -1) for x in x_views]
    f1, f2 = decision_function(model, rows)
    return float(f1[0]), float(f2[0])


def predict(model: TmvrkmModel, X_views: Sequence) -> np.ndarray:
    f1, f2 = decision_function(model, X_views)
    return labels_from_scores(f1, f2)


# ---------------------------------------------------------------------------
# diagnostics


def stationarity_check(model: TmvrkmModel) -> tuple[float, float, float, float]:
    """Max-norm residuals of the four stationarity conditions.

    Rebuilds the explicit weights of a linear-kernel fit and evaluates the
    ``h1``/``b1`` conditions of the first Lagrangian and the ``h2``/``b2``
    conditions of the second.
    """
    p = model.params
    if p.kernel.kind != "linear":
        raise UnsupportedCheckError("explicit weights exist only for the linear kernel")
    if p.variant != "derivation_consistent":
        raise UnsupportedCheckError("stationarity holds only for the derivation_consistent variant")
    split = model.split
    m1, m2 = split.m1, split.m2
    grad_h1 = -p.lambda1 * model.h1
    grad_h2 = -p.lambda2 * model.h2
    for A, B in zip(split.A_views, split.B_views):
        w = (A.T @ model.h1 - B.sum(axis=0)) / p.eta1
        u = -(A.sum(axis=0) + B.T @ model.h2) / p.eta2
        grad_h1 = grad_h1 + (1.0 - A @ w - model.b1)
        grad_h2 = grad_h2 + (1.0 + B @ u + model.b2)
    r_h1 = float(np.max(np.abs(grad_h1)))
    r_b1 = abs(float(model.h1.sum()) - m2)
    r_h2 = float(np.max(np.abs(grad_h2)))
    r_b2 = abs(float(model.h2.sum()) - m1)
    return r_h1, r_b1, r_h2, r_b2


def bottom_row_gaps(model: TmvrkmModel) -> tuple[float, float]:
    """``(|1^T h1 - m2|, |1^T h2 - m1|)``."""
    return (abs(float(model.h1.sum()) - model.split.m2),
            abs(float(model.h2.sum()) - model.split.m1))


def conjugate_gap(xi: np.ndarray, h: np.ndarray, lam: float) -> float:
    """``xi^T xi / (2 lam) - (xi^T h - lam/2 h^T h)``; nonnegative, zero at ``xi = lam h``."""
    xi = np.asarray(xi, dtype=float)
    h = np.asarray(h, dtype=float)
    return float(xi @ xi / (2.0 * lam) - (xi @ h - 0.5 * lam * (h @ h)))
