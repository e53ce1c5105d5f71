"""Bin-width bias of the histogram second moment E[l_w(a)^2] against E[l_T(a)^2].

Prints, per bin width, the exact second moment of the bin estimator (bivariate
density averaged over bin x bin), the chaos series at K and the direct
double integral, and optionally a Monte Carlo value.

    python3 scripts/localtime_bias_sweep.py --H 0.75 --level 0.2 [--mc 2000]
"""
import argparse
import math

import numpy as np

from wnlocal.chaos import (
    localtime_second_moment_binned,
    localtime_second_moment_direct,
    localtime_variance_series,
)
from wnlocal.kernels import KernelFamily
from wnlocal.localtime import BinSpec, estimate_localtime
from wnlocal.simulate import CholeskySampler, uniform_grid


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--H", type=float, default=0.75)
    p.add_argument("--level", type=float, default=0.2)
    p.add_argument("--K", type=int, default=30)
    p.add_argument("--widths", type=float, nargs="*", default=[0.08, 0.04, 0.02, 0.01, 0.001])
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo paths per width (0: skip)")
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--seed", type=int, default=6)
    args = p.parse_args(argv)
    k, a = KernelFamily.fbm(args.H), args.level
    series = localtime_variance_series(k, a, 1.0, args.K)
    direct = localtime_second_moment_direct(k, a, 1.0)
    print(f"{k.label()} a={a:g}: series(K={args.K}) = {series.value:.5f}, direct = {direct:.5f}")
    sampler = CholeskySampler(k, uniform_grid(1.0, args.steps)) if args.mc else None
    print(f"{'width':>8s} {'binned exact':>13s} {'gap to direct':>14s}" + ("  monte carlo" if args.mc else ""))
    for w in args.widths:
        b = localtime_second_moment_binned(k, a, 1.0, w)
        line = f"{w:8.4g} {b:13.5f} {direct - b:14.5f}"
        if sampler is not None:
            vals = []
            for e in sampler.blocks(args.mc, args.seed, 1000):
                vals.append(estimate_localtime(e, BinSpec(w, a), record_times="final").at_level(a))
            v = np.concatenate(vals) ** 2
            line += f"  {v.mean():.4f} +- {v.std(ddof=1) / math.sqrt(v.size):.4f}"
        print(line)


if __name__ == "__main__":
    main()
