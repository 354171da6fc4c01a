"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--quick]

Times the two hot kernels (Newton-kernel summation and pairwise Coulomb
energy/gradient) on representative problem sizes and prints a table with
the speedup of the compiled backend.
"""

import argparse
import time

import numpy as np

from potkit import kernels


def _time(fn, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_point_source_sum(rng, n_src, n_tgt):
    src = rng.uniform(-1, 1, (n_src, 3))
    w = rng.uniform(-1, 1, n_src)
    tgt = rng.uniform(-2, 2, (n_tgt, 3))
    near_r = np.full(n_src, 1e-3)
    near_v = np.full(n_src, 1.0)
    return lambda: kernels.point_source_sum(src, w, tgt, near_r, near_v)


def bench_pairwise(rng, n):
    pos = rng.uniform(-1, 1, (n, 3))
    m = rng.uniform(0.5, 2.0, n)
    return lambda: (kernels.pairwise_energy(pos, m), kernels.pairwise_gradient(pos, m))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller sizes, 1 repeat")
    args = parser.parse_args()
    repeats = 1 if args.quick else 3
    scale = 4 if args.quick else 1

    rng = np.random.default_rng(0)
    cases = [
        ("potential 5k src x 20k tgt", bench_point_source_sum(rng, 5_000, 20_000 // scale)),
        ("potential 30k src x 30k tgt", bench_point_source_sum(rng, 30_000 // scale, 30_000 // scale)),
        ("pairwise N=2000", bench_pairwise(rng, 2_000 // scale)),
    ]

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend unavailable; timing the NumPy fallback only")

    print(f"{'case':<32}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases:
        times = {}
        for backend in backends:
            kernels.use_backend(backend)
            times[backend] = _time(fn, repeats)
        row = f"{name:<32}" + "".join(f"{times[b]:>11.3f}s" for b in backends)
        if "cython" in times and "numpy" in times:
            row += f"{times['numpy'] / times['cython']:>9.1f}x"
        print(row)
    kernels.use_backend("auto")


if __name__ == "__main__":
    main()
