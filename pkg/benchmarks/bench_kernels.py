"""Benchmark: compiled kernels vs the numpy fallback.

Times the two hot kernels on representative workloads (quadrature-node
batches of the sizes the period solver and the mesh integrator use) and an
end-to-end period-matrix computation under each backend.

Run:  python benchmarks/bench_kernels.py
"""

import os
import sys
import time

import numpy as np


def _time(fn, *args, repeat=7):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    from maxperiodic.kernels import _fallback
    try:
        from maxperiodic.kernels import _kernels
    except ImportError:
        print("compiled extension not built; run pip install -e . first")
        return
    rng = np.random.default_rng(1)
    branch = np.array([-2.0, -1.0, 0.5, 2.0])
    terms = [(rng.normal(size=3) + 0j, rng.normal(size=2) + 0j,
              np.array([-0.3 + 0j, 1.0]), 1) for _ in range(6)]
    print(f"{'workload':<38}{'python':>12}{'cython':>12}{'speedup':>9}")
    for size in (64, 1024, 16384):
        z = rng.normal(size=size) + 1j * rng.normal(size=size)
        w = _fallback.w_branch(z, branch)
        tp = _time(_fallback.w_branch, z, branch)
        tc = _time(_kernels.w_branch, z, branch)
        print(f"{'w_branch n=%d' % size:<38}{tp * 1e6:>10.1f}us"
              f"{tc * 1e6:>10.1f}us{tp / tc:>9.2f}x")
        tp = _time(_fallback.eval_terms, z, w, terms)
        tc = _time(_kernels.eval_terms, z, w, terms)
        print(f"{'eval_terms n=%d (6 terms)' % size:<38}{tp * 1e6:>10.1f}us"
              f"{tc * 1e6:>10.1f}us{tp / tc:>9.2f}x")


def bench_periods():
    results = {}
    for backend in ("cython", "python"):
        os.environ["MAXPERIODIC_PURE_PYTHON"] = \
            "1" if backend == "python" else "0"
        for mod in list(sys.modules):
            if mod.startswith("maxperiodic"):
                del sys.modules[mod]
        from maxperiodic.curve import RealHyperellipticCurve
        from maxperiodic.homology import dual_basis_and_periods
        from maxperiodic.kernels import BACKEND
        cv = RealHyperellipticCurve([-2.0, -1.0, 0.5, 2.0])
        t0 = time.perf_counter()
        for _ in range(3):
            dual_basis_and_periods(cv)
        results[BACKEND] = (time.perf_counter() - t0) / 3
    print(f"\n{'period matrix (n=1), per solve':<38}"
          f"{results.get('python', float('nan')) * 1e3:>10.1f}ms"
          f"{results.get('cython', float('nan')) * 1e3:>10.1f}ms"
          f"{results['python'] / results['cython']:>9.2f}x")


if __name__ == "__main__":
    bench_kernels()
    bench_periods()
