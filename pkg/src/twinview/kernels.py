"""Kernels, multiview Gram matrices and the bordered linear solver."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import _accel
from .errors import ConfigError, DimensionError, SingularSystemError, ViewMismatchError

KERNEL_KINDS = ("rbf", "linear")

# Smallest admissible |Schur complement| of the scalar border.
SCHUR_TOL = 1e-14
_SYMMETRY_RTOL = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth.

    The RBF kernel is ``exp(-||x - y||^2 / (2 sigma^2))``; ``sigma`` is ignored
    for the linear kernel ``<x, y>``.
    """

    kind: str = "rbf"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        sigma = float(self.sigma)
        if self.kind == "rbf" and not (np.isfinite(sigma) and sigma > 0):
            raise ConfigError(f"rbf kernel needs sigma > 0, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls("rbf", sigma)

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear", 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["kind"], d.get("sigma", 1.0))


def kernel_eval(x, y, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"vector dimensions differ: {x.size} vs {y.size}")
    if spec.kind == "linear":
        return float(np.dot(x, y))
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.sigma * spec.sigma)))


def _as_matrix(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {X.shape}")
    return X


def gram(X, Y, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix with entry ``(i, j) = k(X[i], Y[j])``."""
    X = _as_matrix(X, "X")
    Y = _as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"column dimensions differ: {X.shape[1]} vs {Y.shape[1]}")
    if spec.kind == "linear":
        return _accel.linear(X, Y)
    return _accel.rbf(X, Y, spec.sigma)


def check_views(views: Sequence, name: str = "views") -> int:
    """Validate a list of per-view matrices sharing one row count; return it."""
    if len(views) < 1:
        raise ViewMismatchError(f"{name}: at least one view is required")
    rows = {np.shape(v)[0] if np.ndim(v) == 2 else None for v in views}
    if None in rows:
        raise ViewMismatchError(f"{name}: every view must be a 2-D matrix")
    if len(rows) != 1:
        raise ViewMismatchError(f"{name}: views have inconsistent row counts {sorted(rows)}")
    return rows.pop()


def multiview_gram(Xs: Sequence, Ys: Sequence, spec: KernelSpec) -> np.ndarray:
    """Sum over views of ``gram(Xs[v], Ys[v])``, one kernel for all views."""
    if len(Xs) != len(Ys):
        raise ViewMismatchError(f"view counts differ: {len(Xs)} vs {len(Ys)}")
    Xs = [_as_matrix(X, "X") for X in Xs]
    Ys = [_as_matrix(Y, "Y") for Y in Ys]
    check_views(Xs, "left views")
    check_views(Ys, "right views")
    for v, (X, Y) in enumerate(zip(Xs, Ys)):
        if X.shape[1] != Y.shape[1]:
            raise ViewMismatchError(f"view {v}: feature dimensions differ ({X.shape[1]} vs {Y.shape[1]})")
    total = gram(Xs[0], Ys[0], spec)
    for X, Y in zip(Xs[1:], Ys[1:]):
        total += gram(X, Y, spec)
    return total


@dataclass(frozen=True)
class BorderedSystem:
    """``[[core, border], [border^T, corner]] [h; b] = [rhs_top; rhs_bottom]``.

    ``core`` is symmetric positive definite whenever a positive regularizer is
    folded into its diagonal.
    """

    core: np.ndarray
    border: np.ndarray
    rhs_top: np.ndarray
    rhs_bottom: float
    corner: float = field(default=0.0)

    def __post_init__(self):
        core = np.array(self.core, dtype=float)
        border = np.array(self.border, dtype=float).ravel()
        rhs = np.array(self.rhs_top, dtype=float).ravel()
        n = border.size
        if core.shape != (n, n) or rhs.size != n:
            raise DimensionError(
                f"inconsistent block shapes: core {core.shape}, border {border.size}, rhs {rhs.size}"
            )
        if n == 0:
            raise DimensionError("empty bordered system")
        scale = max(1.0, float(np.max(np.abs(core))))
        if np.max(np.abs(core - core.T)) > _SYMMETRY_RTOL * scale:
            raise ConfigError("core block is not symmetric")
        for a in (core, border, rhs):
            a.setflags(write=False)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "border", border)
        object.__setattr__(self, "rhs_top", rhs)
        object.__setattr__(self, "rhs_bottom", float(self.rhs_bottom))
        object.__setattr__(self, "corner", float(self.corner))

    @property
    def size(self) -> int:
        return self.border.size

    def full_matrix(self) -> np.ndarray:
        n = self.size
        M = np.empty((n + 1, n + 1))
        M[:n, :n] = self.core
        M[:n, n] = self.border
        M[n, :n] = self.border
        M[n, n] = self.corner
        return M

    def full_rhs(self) -> np.ndarray:
        return np.append(self.rhs_top, self.rhs_bottom)

    def residual(self, h: np.ndarray, b: float) -> float:
        """Normwise relative residual ``||Mx - r|| / (||M|| ||x|| + ||r||)``."""
        M = self.full_matrix()
        x = np.append(h, b)
        r = self.full_rhs()
        denom = np.linalg.norm(M) * np.linalg.norm(x) + np.linalg.norm(r)
        if denom == 0.0:
            return 0.0
        return float(np.linalg.norm(M @ x - r) / denom)


def solve_bordered(system: BorderedSystem) -> tuple[np.ndarray, float]:
    """Solve a bordered system for ``(h, b)``.

    Cholesky of the core followed by elimination of the scalar border; a dense
    LU solve of the full matrix is used when the core is not numerically
    positive definite.

    Raises
    ------
    SingularSystemError
        If the Schur complement of the border is below ``SCHUR_TOL`` in
        magnitude, or both factorizations fail.
    """
    try:
        factor = scipy.linalg.cho_factor(system.core, lower=True, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        return _solve_lu(system)
    rhs = np.column_stack([system.border, system.rhs_top])
    sol = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    x_border, x_rhs = sol[:, 0], sol[:, 1]
    schur = system.corner - float(system.border @ x_border)
    if not np.isfinite(schur) or abs(schur) < SCHUR_TOL:
        raise SingularSystemError(f"Schur complement {schur:.3e} below {SCHUR_TOL:g}")
    b = (system.rhs_bottom - float(system.border @ x_rhs)) / schur
    h = x_rhs - x_border * b
    if not (np.all(np.isfinite(h)) and np.isfinite(b)):
        raise SingularSystemError("non-finite solution from Cholesky path")
    return h, float(b)


def _solve_lu(system: BorderedSystem) -> tuple[np.ndarray, float]:
    M = system.full_matrix()
    if not np.all(np.isfinite(M)):
        raise SingularSystemError("system matrix has non-finite entries")
    with warnings.catch_warnings():
        # An exactly zero pivot is reported below as SingularSystemError.
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * diag.max() * M.shape[0]:
        raise SingularSystemError("bordered system is singular (Cholesky and LU both failed)")
    x = scipy.linalg.lu_solve((lu, piv), system.full_rhs(), check_finite=False)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("non-finite solution from LU path")
    return x[:-1].copy(), float(x[-1])
