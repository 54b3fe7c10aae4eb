#!/usr/bin/env python3
"""Benchmark the compiled k-NN scoring kernel against the numpy fallback.

Both backends must return bit-identical scores; this script verifies the
equality on every size it times.

    python benchmarks/bench_knn.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sleepscan.kernels import _knn_py

try:
    from sleepscan.kernels import _knn_c
except ImportError:
    _knn_c = None

SIZES = [
    # (n_train, n_query, dim, k)  first row mirrors one detection fold
    (600, 600, 6, 35),
    (2000, 2000, 6, 35),
    (5000, 1000, 6, 35),
    (2000, 2000, 16, 35),
    (8000, 2000, 6, 35),
]


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _knn_c is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    header = f"{'n_train':>8} {'n_query':>8} {'dim':>4} {'k':>4} {'numpy':>10} {'cython':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, q, d, k in SIZES:
        train = np.ascontiguousarray(rng.normal(size=(n, d)))
        query = np.ascontiguousarray(rng.normal(size=(q, d)))
        t_py, r_py = timeit(lambda: _knn_py.knn_sum_distances(train, query, k, False), args.repeats)
        if _knn_c is not None:
            t_c, r_c = timeit(lambda: _knn_c.knn_sum_distances(train, query, k, False), args.repeats)
            assert np.array_equal(r_py, r_c), "backends diverged"
            print(f"{n:>8} {q:>8} {d:>4} {k:>4} {t_py * 1e3:>8.1f}ms {t_c * 1e3:>8.1f}ms {t_py / t_c:>7.2f}x")
        else:
            print(f"{n:>8} {q:>8} {d:>4} {k:>4} {t_py * 1e3:>8.1f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
