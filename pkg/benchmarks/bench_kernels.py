"""Benchmark the numba kernels against the pure-NumPy fallbacks.

Times the two hot kernels (greedy stage merging and Lloyd iterations) on
synthetic strata of growing size, plus one end-to-end discovery run per
backend.  Run:

    python benchmarks/bench_kernels.py
"""

import math
import time

import numpy as np

from stagecause import _kernels
from stagecause.experiment import ExperimentConfig, _run_cell_rep


def _time(fn, *args, repeat=5):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_bhc(backends):
    rng = np.random.default_rng(0)
    print("\ngreedy stage merging (contexts x levels, seconds per call)")
    header = f"{'size':>12}" + "".join(f"{b:>12}" for b in backends)
    print(header)
    for c, lv in [(16, 2), (64, 4), (256, 4), (512, 4)]:
        counts = rng.integers(0, 40, size=(c, lv)).astype(float)
        log_n = math.log(counts.sum())
        row = f"{f'{c}x{lv}':>12}"
        for b in backends:
            fn = _kernels.IMPLEMENTATIONS[b]["bhc_merge"]
            fn(counts, log_n)  # warm up / compile
            row += f"{_time(fn, counts, log_n):>12.4f}"
        print(row)


def bench_lloyd(backends):
    rng = np.random.default_rng(1)
    print("\nLloyd iterations (points x dims, k=2, seconds per call)")
    print(f"{'size':>12}" + "".join(f"{b:>12}" for b in backends))
    for n, d in [(64, 4), (256, 4), (1024, 4)]:
        points = rng.random((n, d))
        centers = points[:2].copy()
        row = f"{f'{n}x{d}':>12}"
        for b in backends:
            fn = _kernels.IMPLEMENTATIONS[b]["lloyd"]
            fn(points, centers, 100)
            row += f"{_time(fn, points, centers, 100):>12.4f}"
        print(row)


def bench_end_to_end():
    cfg = ExperimentConfig(
        p_values=(5,), l_values=(4,), k_values=(4,), n_values=(10000,), reps=1, seed=0
    )
    args = (5, 4, 4, 10000, 0, cfg)
    _run_cell_rep(args)  # warm up
    t = _time(lambda: _run_cell_rep(args), repeat=3)
    print(
        f"\nend-to-end discovery (p=5, l=4, N=10000, both methods), "
        f"{_kernels.BACKEND} backend: {t:.2f} s"
    )
    print("rerun with STAGECAUSE_BACKEND=numpy to compare the fallback")


if __name__ == "__main__":
    backends = list(_kernels.IMPLEMENTATIONS)
    print(f"active backend: {_kernels.BACKEND}; available: {backends}")
    bench_bhc(backends)
    bench_lloyd(backends)
    bench_end_to_end()
