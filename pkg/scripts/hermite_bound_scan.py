"""Sup ratio of |e_k(x)| to the two-regime envelope as the decay rate gamma varies.

    python3 scripts/hermite_bound_scan.py [--kmax 200] [--xmax 50]
"""
import argparse
import math

import numpy as np

from wnlocal.hermite import hermite_bound_ratio


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--kmax", type=int, default=200)
    p.add_argument("--xmax", type=float, default=50.0)
    p.add_argument("--gammas", type=float, nargs="*",
                   default=[0.05, 0.1, 0.12, 0.13, 0.14, 0.15, 0.2, 0.3, 0.4, 0.5])
    args = p.parse_args(argv)
    print(f"{'gamma':>6s} {'log10 ratio':>12s} {'k':>4s} {'x':>8s}")
    for g in args.gammas:
        b = hermite_bound_ratio(args.kmax, args.xmax, g)
        print(f"{g:6.3f} {b.log_ratio / math.log(10):12.3f} {b.k:4d} {b.x:8.3f}")
    # the largest gamma whose ratio stays below 10, by bisection
    lo, hi = 0.0, 1.0
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if hermite_bound_ratio(args.kmax, args.xmax, mid, n_x=5001).log_ratio <= math.log(10.0):
            lo = mid
        else:
            hi = mid
    print(f"largest gamma with ratio <= 10: {lo:.4f}")


if __name__ == "__main__":
    main()
