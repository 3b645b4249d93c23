"""Benchmark the numba and numpy paths of the hot kernels.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the d-dimensional sliding-window maximum (the moving-max sampler
core) and the exhaustive two-atom enumeration oracle on both backends.
The active package backend is whatever `phantomfields.kernels.backend()`
reports; both raw implementations are called here directly.
"""

import argparse
import time

import numpy as np

from phantomfields import kernels


def timeit(fn, repeats):
    fn()  # warm-up (JIT compilation happens here for the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sliding(repeats):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((2000, 512))
    rows = []
    for w in (2, 4, 16):
        t_np = timeit(lambda: kernels.sliding_max_last_numpy(a, w), repeats)
        if kernels.HAVE_NUMBA:
            t_nb = timeit(lambda: kernels.sliding_max_last_numba(a, w), repeats)
        else:
            t_nb = float("nan")
        rows.append((f"sliding_max w={w} (2000x512)", t_np, t_nb))
    return rows

def bench_enum(repeats, large=False):
    rows = []
    cases = [((3, 3), (2, 2))]
    if large:
        cases.append(((4, 4), (2, 2)))  # 2^25 configs; ~30 s on the numpy path
    for block, window in cases:
        args = (block, window, 0.0, 1.0, 0.5, 0.5)
        t_np = timeit(lambda: kernels.enum_block_cdf_table_numpy(*args), repeats)
        if kernels.HAVE_NUMBA:
            t_nb = timeit(lambda: kernels.enum_block_cdf_table_numba(*args), repeats)
        else:
            t_nb = float("nan")
        sites = (block[0] + window[0] - 1) * (block[1] + window[1] - 1)
        rows.append((f"enum block={block} ({sites} sites, 2^{sites} cfgs)", t_np, t_nb))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--large", action="store_true", help="include the 2^25-config enumeration case")
    args = ap.parse_args()
    print(f"numba available: {kernels.HAVE_NUMBA}; package backend: {kernels.backend()}")
    print(f"{'kernel':<42} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, t_np, t_nb in bench_sliding(args.repeats) + bench_enum(args.repeats, args.large):
        ratio = t_np / t_nb if t_nb == t_nb and t_nb > 0 else float("nan")
        print(f"{name:<42} {t_np * 1e3:>8.2f}ms {t_nb * 1e3:>8.2f}ms {ratio:>8.1f}x")


if __name__ == "__main__":
    main()
