#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the two hot kernels at several sizes:
  * signed_subset_eval -- the inner loop of bound optimization (called
    thousands of times per diagnosis request),
  * closure_reach -- one-shot transitive closure of an IS-A snapshot.
"""

import argparse
import time

import numpy as np

from dxlink.kernels import _pure

try:
    from dxlink.kernels import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeats=200):
    fn(*args)  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_subset_eval(repeats):
    print("signed_subset_eval (best-of-run seconds per call)")
    print(f"{'|E|':>4} {'D':>5} {'pure':>12} {'cython':>12} {'speedup':>8}")
    rng = np.random.default_rng(1)
    for n_exact, n_dis in [(2, 10), (4, 30), (6, 60), (8, 100), (10, 200), (12, 485)]:
        theta0 = rng.uniform(0.0, 0.3, n_exact)
        theta = rng.uniform(0.0, 2.0, (n_exact, n_dis))
        base = rng.normal(0.0, 1.0, n_dis)
        p = rng.uniform(1e-4, 0.05, n_dis)
        args = (theta0, theta, base, np.log(p), np.log1p(-p), True, 1e-9)
        t_pure = time_call(_pure.signed_subset_eval, *args, repeats=repeats)
        if _core is not None:
            t_core = time_call(_core.signed_subset_eval, *args, repeats=repeats)
            print(f"{n_exact:>4} {n_dis:>5} {t_pure:>12.3e} {t_core:>12.3e} "
                  f"{t_pure / t_core:>7.1f}x")
        else:
            print(f"{n_exact:>4} {n_dis:>5} {t_pure:>12.3e} {'-':>12} {'-':>8}")


def bench_closure(repeats):
    print("\nclosure_reach (best-of-run seconds per call)")
    print(f"{'nodes':>6} {'edges':>6} {'pure':>12} {'cython':>12} {'speedup':>8}")
    rng = np.random.default_rng(2)
    for n, m in [(200, 600), (1000, 4000), (5000, 20000), (20000, 80000)]:
        edges = sorted({(int(a), int(b)) for a, b in rng.integers(0, n, (m, 2)) if a < b})
        parents = [[] for _ in range(n)]
        for child, parent in edges:
            parents[child].append(parent)
        indptr = np.zeros(n + 1, dtype=np.int64)
        flat = []
        for i in range(n):
            flat.extend(parents[i])
            indptr[i + 1] = len(flat)
        flat = np.asarray(flat, dtype=np.int64)
        topo = np.arange(n - 1, -1, -1, dtype=np.int64)
        reps = max(1, repeats // 40)
        t_pure = time_call(_pure.closure_reach, n, indptr, flat, topo, repeats=reps)
        if _core is not None:
            t_core = time_call(_core.closure_reach, n, indptr, flat, topo, repeats=reps)
            print(f"{n:>6} {len(edges):>6} {t_pure:>12.3e} {t_core:>12.3e} "
                  f"{t_pure / t_core:>7.1f}x")
        else:
            print(f"{n:>6} {len(edges):>6} {t_pure:>12.3e} {'-':>12} {'-':>8}")


def bench_diagnosis():
    """End-to-end: one diagnosis on the synthetic KB under each backend."""
    import os
    import subprocess
    import sys

    code = (
        "import time\n"
        "from dxlink.evaluation import synthetic_kb, generate_synthetic_cases\n"
        "from dxlink.inference import build_network, variational_posteriors, Evidence\n"
        "from dxlink.kernels import backend_name\n"
        "kb = synthetic_kb(seed=7); net = build_network(kb)\n"
        "links = kb.links_by_disorder[sorted(kb.disorders)[0]]\n"
        "ev = Evidence(frozenset(l.finding_id for l in links[:8]), frozenset())\n"
        "variational_posteriors(net, ev, k=4)\n"
        "t0 = time.perf_counter()\n"
        "for _ in range(5): variational_posteriors(net, ev, k=4)\n"
        "print(f'{backend_name}: {(time.perf_counter()-t0)/5:.3f}s per diagnosis (8 findings, k=4)')\n"
    )
    print("\nend-to-end diagnosis")
    for env_extra in ({}, {"DXLINK_PURE": "1"}):
        env = dict(os.environ, **env_extra)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    if _core is None:
        print("note: compiled core not built; showing fallback timings only\n")
    bench_subset_eval(args.repeats)
    bench_closure(args.repeats)
    bench_diagnosis()


if __name__ == "__main__":
    main()
