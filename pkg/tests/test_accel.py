import os
import subprocess
import sys

import numpy as np
import pytest

from twinview import _accel

pytestmark = pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")


@pytest.mark.parametrize("shape", [(7, 5, 3), (1, 1, 1), (40, 13, 17)])
def test_numba_and_numpy_sqdist_agree(rng, shape):
    n, m, d = shape
    X, Y = rng.normal(size=(n, d)), rng.normal(size=(m, d))
    np.testing.assert_allclose(_accel.sqdist_numba(X, Y), _accel.sqdist_numpy(X, Y), rtol=1e-12, atol=1e-12)


def test_numba_and_numpy_rbf_agree(rng):
    X, Y = rng.normal(size=(30, 4)), rng.normal(size=(20, 4))
    for sigma in (0.1, 1.0, 7.5):
        np.testing.assert_allclose(_accel.rbf_numba(X, Y, sigma), _accel.rbf_numpy(X, Y, sigma),
                                   rtol=1e-12, atol=1e-15)
        D = _accel.sqdist_numba(X, Y)
        np.testing.assert_array_equal(_accel.rbf_from_sqdist_numba(D, sigma), _accel.rbf_numba(X, Y, sigma))


def test_numba_and_numpy_linear_agree(rng):
    X, Y = rng.normal(size=(11, 6)), rng.normal(size=(9, 6))
    np.testing.assert_allclose(_accel.linear_numba(X, Y), _accel.linear_numpy(X, Y), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("fn", ["numba", "numpy"])
def test_self_gram_exact_unit_diagonal_and_symmetry(rng, fn):
    X = rng.normal(size=(25, 5))
    K = getattr(_accel, f"rbf_{fn}")(X, X, 0.8)
    assert np.all(np.diag(K) == 1.0)
    assert np.array_equal(K, K.T)


def test_thread_count_does_not_change_results(rng):
    X = rng.normal(size=(64, 8))
    base = _accel.rbf_numba(X, X, 1.3)
    import numba
    prev = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        single = _accel.rbf_numba(X, X, 1.3)
    finally:
        numba.set_num_threads(prev)
    assert np.array_equal(base, single)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, TWINVIEW_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", "import twinview._accel as a; print(a.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
