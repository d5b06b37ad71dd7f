"""Time RBF and linear Gram construction on the numba and numpy backends.

Usage::

    python benchmarks/bench_gram.py [--sizes 200,500,1000,2000] [--dim 20] [--repeat 5]

Each backend is called directly, so the ``TWINVIEW_NUMBA`` flag does not
matter here. The first numba call per signature is a warm-up and is not timed.
"""

import argparse
import time

import numpy as np

from twinview import _accel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="200,500,1000,2000")
    parser.add_argument("--dim", type=int, default=20)
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    threads = _accel.configure_threads()
    rng = np.random.default_rng(args.seed)
    print(f"numba threads: {threads}, dim: {args.dim}, best of {args.repeat}")
    print(f"{'n':>6} {'kernel':>7} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for n in (int(s) for s in args.sizes.split(",")):
        X = rng.normal(size=(n, args.dim))
        cases = (
            ("rbf", lambda: _accel.rbf_numpy(X, X, args.sigma), lambda: _accel.rbf_numba(X, X, args.sigma)),
            ("linear", lambda: _accel.linear_numpy(X, X), lambda: _accel.linear_numba(X, X)),
        )
        for name, slow, fast in cases:
            fast()  # compile / load from cache
            diff = float(np.max(np.abs(slow() - fast())))
            t_np = best_of(slow, args.repeat)
            t_nb = best_of(fast, args.repeat)
            print(f"{n:>6} {name:>7} {1e3 * t_np:>10.2f} {1e3 * t_nb:>10.2f} {t_np / t_nb:>8.1f} {diff:>11.1e}")


if __name__ == "__main__":
    main()
