"""Compare the jitted and pure-numpy Gram kernels.

Times ``gram_diag_kron`` and ``gram_column_kron`` on a sweep of mode sizes
at fixed ranks.  The active path is chosen at import time by the
``MODETRUNC_NO_NUMBA`` environment variable, so the numpy column is always
available via the ``*_np`` references while the "active" column reflects
the configured path.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1024 4096 16384] [--rank 9]
"""

import argparse
import time

import numpy as np

from modetrunc import kernels


def timeit(fn, *args, repeat=5):
    fn(*args)                                 # warm-up (jit compile)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[1024, 4096, 16384, 65536])
    ap.add_argument("--rank", type=int, default=9,
                    help="per-side rank; the factor has rank^2 columns")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    r = args.rank
    rng = np.random.default_rng(0)
    g = rng.standard_normal((r, r))
    h = rng.standard_normal((r, r))
    ghat, hhat = g @ g.T, h @ h.T

    path = "numba" if kernels.USE_NUMBA else "numpy"
    print(f"active path: {path} (set MODETRUNC_NO_NUMBA=1 for numpy)")
    print(f"rank {r} per side, factor width {r * r}")
    print(f"{'n':>8} {'diag active':>12} {'diag numpy':>12} "
          f"{'col active':>12} {'col numpy':>12} {'speedup d':>10} {'c':>6}")
    for n in args.sizes:
        u2 = rng.standard_normal((n, r * r))
        u3 = u2.reshape(n, r, r)
        td_a = timeit(kernels.gram_diag_kron, u3, ghat, hhat,
                      repeat=args.repeat)
        td_n = timeit(kernels.gram_diag_kron_np, u3, ghat, hhat,
                      repeat=args.repeat)
        tc_a = timeit(kernels.gram_column_kron, u2, u3, ghat, hhat, n // 2,
                      repeat=args.repeat)
        tc_n = timeit(kernels.gram_column_kron_np, u2, u3, ghat, hhat, n // 2,
                      repeat=args.repeat)
        assert np.allclose(kernels.gram_diag_kron(u3, ghat, hhat),
                           kernels.gram_diag_kron_np(u3, ghat, hhat),
                           rtol=1e-12)
        print(f"{n:>8} {td_a:>12.2e} {td_n:>12.2e} {tc_a:>12.2e} "
              f"{tc_n:>12.2e} {td_n / td_a:>10.2f} {tc_n / tc_a:>6.2f}")


if __name__ == "__main__":
    main()
