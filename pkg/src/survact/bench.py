"""Benchmark the compiled kernels against the pure-numpy fallback.

Run with ``python -m survact.bench``. Times the four hot kernels on
workloads shaped like the active-learning inner loop and reports the
speedup of the compiled backend (when it is available).
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels_py

try:
    from . import _ckernels
except ImportError:
    _ckernels = None


def _timeit(fn, repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def _workloads():
    rng = np.random.default_rng(7)

    n, p = 250, 8
    x = np.ascontiguousarray(rng.standard_normal((n, p)))
    t = np.sort(rng.exponential(20.0, n))
    e = rng.uniform(size=n) < 0.8
    beta = rng.normal(0, 0.3, p)

    nv = 500
    tv = rng.exponential(20.0, nv)
    evv = rng.uniform(size=nv) < 0.8
    sv = rng.standard_normal(nv)

    ns = 400
    vals = rng.standard_normal(ns)
    ts = rng.exponential(20.0, ns)
    es = rng.uniform(size=ns) < 0.7

    return [
        ("cox_loglik (n=250, p=8)", "cox_loglik", (x, t, e, beta), 2000),
        ("cox_grad_hess (n=250, p=8)", "cox_grad_hess", (x, t, e, beta), 500),
        ("concordance_counts (n=500)", "concordance_counts", (tv, evv, sv), 500),
        ("best_split_logrank (n=400)", "best_split_logrank", (vals, ts, es, 3), 100),
    ]


def main() -> None:
    print(f"compiled backend available: {_ckernels is not None}")
    header = f"{'kernel':36s} {'pure (ms)':>12s} {'compiled (ms)':>14s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for label, name, args, repeats in _workloads():
        pure = _timeit(lambda: getattr(_kernels_py, name)(*args), repeats)
        if _ckernels is not None:
            comp = _timeit(lambda: getattr(_ckernels, name)(*args), repeats)
            print(f"{label:36s} {pure * 1e3:12.4f} {comp * 1e3:14.4f} {pure / comp:8.1f}x")
        else:
            print(f"{label:36s} {pure * 1e3:12.4f} {'-':>14s} {'-':>9s}")


if __name__ == "__main__":
    main()
