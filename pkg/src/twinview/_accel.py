"""Inner loops for Gram-matrix construction.

Two interchangeable backends live here: numba-compiled row-parallel loops and
a pure-numpy path. The numba path is used when numba imports and the
environment variable ``TWINVIEW_NUMBA`` is not set to ``0``/``false``/``off``.
``TWINVIEW_THREADS`` caps the numba worker count (``0`` or unset = numba's own
default).

Every output entry is computed independently, with no reduction across
entries, so results do not depend on the number of worker threads.
Squared distances are accumulated as ``sum_k (x_k - y_k)**2`` rather than
through the ``|x|^2 + |y|^2 - 2<x, y>`` expansion: identical rows give an exact
zero, so RBF self-Grams carry an exact unit diagonal and are bitwise
symmetric.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
    if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ and "NUMBA_THREADING_LAYER" not in os.environ:
        # Old system TBB builds trigger a warning on every probe.
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False


def _flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return raw.strip().lower() not in {"0", "false", "off", "no"}


USE_NUMBA = HAS_NUMBA and _flag("TWINVIEW_NUMBA", True)

# Rows per block in the numpy path; bounds the (rows, m, d) temporary.
_CHUNK_ELEMS = 1 << 22


def configure_threads(count: int | None = None) -> int:
    """Apply a worker cap to numba; returns the effective thread count."""
    if not HAS_NUMBA:
        return 1
    if count is None:
        try:
            count = int(os.environ.get("TWINVIEW_THREADS", "0") or 0)
        except ValueError:
            count = 0
    limit = numba.config.NUMBA_NUM_THREADS
    if count > 0:
        numba.set_num_threads(min(count, limit))
    return numba.get_num_threads()


# ---------------------------------------------------------------------------
# numpy backend


def sqdist_numpy(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    n, d = X.shape
    m = Y.shape[0]
    out = np.empty((n, m))
    step = max(1, _CHUNK_ELEMS // max(1, m * max(d, 1)))
    for start in range(0, n, step):
        diff = X[start:start + step, None, :] - Y[None, :, :]
        np.sum(diff * diff, axis=2, out=out[start:start + step])
    return out


def rbf_from_sqdist_numpy(D: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-D / (2.0 * sigma * sigma))


def rbf_numpy(X: np.ndarray, Y: np.ndarray, sigma: float) -> np.ndarray:
    return rbf_from_sqdist_numpy(sqdist_numpy(X, Y), sigma)


def linear_numpy(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # Elementwise products summed per entry, not BLAS: keeps K(X,Y) == K(Y,X).T
    n = X.shape[0]
    m = Y.shape[0]
    d = X.shape[1]
    out = np.empty((n, m))
    step = max(1, _CHUNK_ELEMS // max(1, m * max(d, 1)))
    for start in range(0, n, step):
        prod = X[start:start + step, None, :] * Y[None, :, :]
        np.sum(prod, axis=2, out=out[start:start + step])
    return out


# ---------------------------------------------------------------------------
# numba backend

if HAS_NUMBA:

    @numba.njit(parallel=True, cache=True)
    def sqdist_numba(X, Y):
        n, d = X.shape
        m = Y.shape[0]
        out = np.empty((n, m))
        for i in numba.prange(n):
            for j in range(m):
                s = 0.0
                for k in range(d):
                    t = X[i, k] - Y[j, k]
                    s += t * t
                out[i, j] = s
        return out

    @numba.njit(parallel=True, cache=True)
    def rbf_from_sqdist_numba(D, sigma):
        n, m = D.shape
        denom = 2.0 * sigma * sigma
        out = np.empty((n, m))
        for i in numba.prange(n):
            for j in range(m):
                out[i, j] = np.exp(-D[i, j] / denom)
        return out

    @numba.njit(parallel=True, cache=True)
    def rbf_numba(X, Y, sigma):
        n, d = X.shape
        m = Y.shape[0]
        denom = 2.0 * sigma * sigma
        out = np.empty((n, m))
        for i in numba.prange(n):
            for j in range(m):
                s = 0.0
                for k in range(d):
                    t = X[i, k] - Y[j, k]
                    s += t * t
                out[i, j] = np.exp(-s / denom)
        return out

    @numba.njit(parallel=True, cache=True)
    def linear_numba(X, Y):
        n, d = X.shape
        m = Y.shape[0]
        out = np.empty((n, m))
        for i in numba.prange(n):
            for j in range(m):
                s = 0.0
                for k in range(d):
                    s += X[i, k] * Y[j, k]
                out[i, j] = s
        return out

else:  # pragma: no cover
    sqdist_numba = rbf_from_sqdist_numba = rbf_numba = linear_numba = None


# ---------------------------------------------------------------------------
# dispatch


def _f64(A: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(A, dtype=np.float64)


def sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, shape ``(len(X), len(Y))``."""
    X, Y = _f64(X), _f64(Y)
    if USE_NUMBA:
        return sqdist_numba(X, Y)
    return sqdist_numpy(X, Y)


def rbf_from_sqdist(D: np.ndarray, sigma: float) -> np.ndarray:
    D = _f64(D)
    if USE_NUMBA:
        return rbf_from_sqdist_numba(D, float(sigma))
    return rbf_from_sqdist_numpy(D, float(sigma))


def rbf(X: np.ndarray, Y: np.ndarray, sigma: float) -> np.ndarray:
    X, Y = _f64(X), _f64(Y)
    if USE_NUMBA:
        return rbf_numba(X, Y, float(sigma))
    return rbf_numpy(X, Y, float(sigma))


def linear(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X, Y = _f64(X), _f64(Y)
    if USE_NUMBA:
        return linear_numba(X, Y)
    return linear_numpy(X, Y)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


configure_threads()
