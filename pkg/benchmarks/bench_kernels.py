"""Benchmark the compiled kernels against the pure numpy/Python fallbacks.

Run from the repository root (after `python3 setup.py build_ext --inplace`):

    PYTHONPATH=src python3 benchmarks/bench_kernels.py
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from tokprobe._kernels import pure  # noqa: E402

try:
    from tokprobe._kernels import _core
except ImportError:
    _core = None


def timeit(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    rng = np.random.default_rng(0)
    rows = []

    keys = np.sort(rng.integers(0, 1_000_000, size=10_000_000)).astype(np.int64)
    rows.append(("count_sorted_runs (1e7 sorted keys)",
                 timeit(pure.count_sorted_runs, keys),
                 timeit(_core.count_sorted_runs, keys) if _core else None))

    n = 30_522
    m = 300_000
    firsts = rng.integers(0, n, size=m).astype(np.int64)
    seconds = rng.integers(0, n, size=m).astype(np.int64)
    rows.append(("union_labels (30522 nodes, 3e5 edges)",
                 timeit(pure.union_labels, n, firsts, seconds),
                 timeit(_core.union_labels, n, firsts, seconds) if _core else None))

    vals = rng.uniform(-1, 1, size=30_000_000)

    def run_hist(impl):
        counts = np.zeros(400, dtype=np.int64)
        impl.hist_accumulate(vals, -1.0, 1.0, counts)

    rows.append(("hist_accumulate (3e7 values, 400 bins)",
                 timeit(run_hist, pure),
                 timeit(run_hist, _core) if _core else None))

    print(f"{'kernel':45s} {'pure':>10s} {'ext':>10s} {'speedup':>9s}")
    for name, t_pure, t_ext in rows:
        if t_ext is None:
            print(f"{name:45s} {t_pure * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>9s}")
        else:
            print(f"{name:45s} {t_pure * 1e3:9.1f}ms {t_ext * 1e3:9.1f}ms "
                  f"{t_pure / t_ext:8.1f}x")
    if _core is None:
        print("\ncompiled extension not built; run: python3 setup.py build_ext --inplace")


if __name__ == "__main__":
    main()
