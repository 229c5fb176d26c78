#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Three workloads mirror the package's hot loops:
  compose   tablewise clone composition on Z_6 (mixed_index)
  pairs     all-pairs composition indices, the ball expansion core
  closure   span closure insertions over Z_3 (reduce_mod_basis)

Run:  python3 benchmarks/bench_kernels.py [--repeat N]

Force one side with CLONECALC_BACKEND=py (or =c) to cross-check numbers;
this script imports both implementations directly and needs no env var.
"""

import argparse
import time

import numpy as np

from clonecalc import _kernels_py
from clonecalc import core
from clonecalc.core import FnTable, LinearMapSpec

try:
    from clonecalc import _speedups
except ImportError:
    _speedups = None


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workload_compose(kernels, rng):
    mod = core.modulus_for(6)
    dom = core.domain(mod.primes, 2)
    weights = dom.weights_matrix()
    stack = rng.integers(0, 2, size=(2, dom.npoints, mod.m), dtype=np.uint8)
    stack[:, :, 1] = rng.integers(0, 3, size=(2, dom.npoints))
    stack = np.ascontiguousarray(stack)

    def run():
        for _ in range(2000):
            kernels.mixed_index(stack, weights)

    return run


def workload_pairs(kernels, rng):
    lhs = rng.integers(0, 36, size=(300, 36)).astype(np.int64)
    rhs = rng.integers(0, 36, size=(300, 36)).astype(np.int64)
    lhs, rhs = np.ascontiguousarray(lhs), np.ascontiguousarray(rhs)

    def run():
        for _ in range(20):
            kernels.pair_index(lhs, rhs)

    return run


def workload_closure(kernels, rng):
    p, dim, nvecs = 3, 243, 400
    vecs = rng.integers(0, p, size=(nvecs, dim), dtype=np.uint8)

    def run():
        basis = np.zeros((dim, dim), dtype=np.uint8)
        pivots = np.zeros(dim, dtype=np.int64)
        nrows = 0
        coeffs = np.zeros(dim, dtype=np.uint8)
        for v in vecs:
            vv = v.copy()
            piv = kernels.reduce_mod_basis(basis[:nrows], pivots[:nrows], nrows, vv, p, coeffs)
            if piv >= 0 and nrows < dim:
                inv = pow(int(vv[piv]), p - 2, p)
                basis[nrows] = (vv.astype(np.int64) * inv) % p
                pivots[nrows] = piv
                nrows += 1

    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    rows = []
    for name, factory in (
        ("compose", workload_compose),
        ("pairs", workload_pairs),
        ("closure", workload_closure),
    ):
        t_py = timed(factory(_kernels_py, rng), args.repeat)
        if _speedups is not None:
            t_c = timed(factory(_speedups, rng), args.repeat)
            rows.append((name, t_py, t_c, t_py / t_c))
        else:
            rows.append((name, t_py, None, None))
    print(f"{'workload':<10} {'py (s)':>10} {'c (s)':>10} {'speedup':>8}")
    for name, t_py, t_c, ratio in rows:
        if t_c is None:
            print(f"{name:<10} {t_py:>10.4f} {'-':>10} {'-':>8}   (extension not built)")
        else:
            print(f"{name:<10} {t_py:>10.4f} {t_c:>10.4f} {ratio:>7.2f}x")
    # end-to-end sanity: a depth-2 ball under whichever backend is active
    mod = core.modulus_for(6)
    mul = FnTable.from_callable(
        mod, 2, lambda pt: ((pt[0][0] * pt[0][1]) % 2, (pt[1][0] * pt[1][1]) % 3)
    )
    from clonecalc import clone
    from clonecalc.backend import backend_name

    t0 = time.perf_counter()
    ball = clone.brute_force_clg_ball([mul], mod, 2, 2)
    sizes = {b: int(s.shape[0]) for b, s in ball.items()}
    print(f"\nend-to-end depth-2 ball (backend={backend_name()}): {sizes} "
          f"in {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
