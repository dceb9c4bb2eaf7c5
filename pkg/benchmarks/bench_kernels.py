"""Compare the compiled core with the pure-Python fallback.

    python benchmarks/bench_kernels.py --n 200000 --k 10 --pages 20

Both backends are called directly, so the numbers do not depend on which one
the package selected at import.  Python timings are taken on a prefix of the
trace (``--python-n``) and scaled to requests per second.
"""

import argparse
import time

import numpy as np

from onebit_paging import _pykernels, ground_truth
from onebit_paging.adversary import random_trace
from onebit_paging.policies import POLICY_CODES

try:
    from onebit_paging import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(mod, ids, bits, k, npages, repeats):
    nxt = mod.next_use(ids)
    rows = {
        "next_use": best_of(lambda: mod.next_use(ids), repeats),
        "phase_starts": best_of(lambda: mod.phase_starts(ids, k, npages), repeats),
        "lfd": best_of(lambda: mod.lfd(ids, k, npages, nxt), repeats),
    }
    for name, code in POLICY_CODES.items():
        rows[name] = best_of(lambda: mod.simulate(code, ids, bits, k, npages, 1), repeats)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--python-n", type=int, default=50_000)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--pages", type=int, default=20)
    ap.add_argument("--zipf", type=float, default=0.8)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    trace = random_trace(args.k, args.n, args.pages, 1, zipf=args.zipf)
    trace = trace.with_predictions(ground_truth(trace, "discard").bits)
    ids, bits, npages = trace.ids, trace.predictions, trace.num_pages
    m = min(args.python_n, args.n)

    py = bench(_pykernels, ids[:m], bits[:m], args.k, npages, 1)
    cy = bench(_kernels, ids, bits, args.k, npages, args.repeats) if _kernels else None

    print(f"n={args.n} (python on {m}), k={args.k}, pages={npages}, zipf={args.zipf}")
    print(f"{'kernel':<18}{'python Mreq/s':>15}{'cython Mreq/s':>15}{'speedup':>10}")
    for name, t_py in py.items():
        rate_py = m / t_py / 1e6
        if cy:
            rate_cy = args.n / cy[name] / 1e6
            print(f"{name:<18}{rate_py:>15.3f}{rate_cy:>15.2f}{rate_cy / rate_py:>9.1f}x")
        else:
            print(f"{name:<18}{rate_py:>15.3f}{'n/a':>15}{'':>10}")


if __name__ == "__main__":
    main()
