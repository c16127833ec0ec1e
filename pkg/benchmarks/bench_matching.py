"""Benchmark the matching backends on a generated dataset.

Compares three routes to the same risk matrices:
  evaluate        blocked all-pairs numpy (quadratic reference)
  evaluate_fast   grouped binary-search kernel, pure-numpy fallback
  evaluate_fast   grouped binary-search kernel, numba-compiled

Run:  python benchmarks/bench_matching.py --n 10000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from idrisk import _kernels
from idrisk.cart import SynthesisPlan, synthesize
from idrisk.experiments import KNOWN_VARS, generate_ce_like
from idrisk.risk import RiskConfig, evaluate, evaluate_fast


def best_of(fn, repeats: int) -> tuple[float, object]:
    result = fn()  # warm-up (also triggers jit compilation)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10000)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--radius", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--skip-brute", action="store_true", help="skip the quadratic reference")
    args = ap.parse_args()

    print(f"generating n = {args.n} and synthesizing m = {args.m} replicates ...")
    orig = generate_ce_like(args.n, seed=args.seed)
    reps = synthesize(orig, SynthesisPlan(("Income",), m=args.m, seed=args.seed))
    cfg = RiskConfig(known=KNOWN_VARS, synthesized=("Income",),
                     radii={"Age": args.radius, "Income": args.radius})

    rows = []
    if not args.skip_brute:
        t_brute, r_brute = best_of(lambda: evaluate(orig, reps, cfg), args.repeats)
        rows.append(("evaluate (blocked numpy, all pairs)", t_brute, r_brute))

    saved = _kernels.USE_NUMBA
    try:
        _kernels.USE_NUMBA = False
        t_np, r_np = best_of(lambda: evaluate_fast(orig, reps, cfg), args.repeats)
        rows.append(("evaluate_fast (numpy fallback)", t_np, r_np))
        if _kernels.HAS_NUMBA:
            _kernels.USE_NUMBA = True
            t_nb, r_nb = best_of(lambda: evaluate_fast(orig, reps, cfg), args.repeats)
            rows.append(("evaluate_fast (numba kernel)", t_nb, r_nb))
    finally:
        _kernels.USE_NUMBA = saved

    base = rows[0][2]
    for _, _, res in rows[1:]:
        assert np.array_equal(base.c_matrix, res.c_matrix)
        assert np.array_equal(base.t_matrix, res.t_matrix)
    print(f"\n{'route':<40} {'best of ' + str(args.repeats):>12}  speedup vs first")
    t0 = rows[0][1]
    for name, t, _ in rows:
        print(f"{name:<40} {t:>10.4f} s  {t0 / t:>8.1f}x")
    print("\nall routes returned identical c and t matrices")


if __name__ == "__main__":
    main()
