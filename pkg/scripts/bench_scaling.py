#!/usr/bin/env python3
"""Measure the per-iteration cost of the environment power loop vs D.

The staged contraction costs O(d * D^(q+1)) per iteration, so doubling D
should multiply the time by about 2^(q+1) once the dense-algebra cost
dominates Python/JIT dispatch overhead.  Prints seconds per iteration,
the ratio per doubling, and the implied exponent.
"""

from __future__ import annotations

import argparse
import math
import sys

from bethe_ittn.environment import benchmark_iteration_time


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--q", type=int, default=3, help="coordination number (default 3)")
    parser.add_argument("--d-list", default="8,16,32",
                        help="comma-separated bond dimensions, each double the last")
    parser.add_argument("--iters", type=int, default=200, help="iterations per timing run")
    parser.add_argument("--repeats", type=int, default=5, help="repeats (median taken)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    ds = [int(tok) for tok in args.d_list.split(",")]
    print(f"q={args.q}, {args.iters} iterations, median of {args.repeats} repeats")
    print(f"{'D':>4}  {'sec/iter':>12}  {'ratio':>8}  {'exponent':>8}")
    prev = None
    for D in ds:
        t = benchmark_iteration_time(args.q, D, n_iter=args.iters, seed=args.seed,
                                     repeats=args.repeats)
        if prev is None:
            print(f"{D:>4}  {t:12.3e}  {'-':>8}  {'-':>8}")
        else:
            ratio = t / prev
            print(f"{D:>4}  {t:12.3e}  {ratio:8.2f}  {math.log2(ratio):8.2f}")
        prev = t
    return 0


if __name__ == "__main__":
    sys.exit(main())
