#!/usr/bin/env python3
"""Finite-shot variance of the shift and projector (MUB) configurations.

Part one checks the law Var = (k^2 - A^2)/n on an (A, k) grid. Part two
samples real circuits: for random states it measures the same element
rho[i, j] with the shift configuration (k = 1) and the projector
configuration (k = d) and compares the spread across seeds.
"""
import argparse
import sys

import numpy as np

from dmkit import qmodel as qm
from dmkit.protocols import state_spec
from dmkit.sampler import ShotPlan, make_rng, sample_hadamard, variance_sweep


def law_table(n, n_seeds, seed):
    print(f"{'A':>5} {'k':>6} {'predicted':>12} {'across seeds':>13} {'pooled':>12}")
    for r in variance_sweep((0.0, 0.3, 0.6, 0.9), (1.0, 0.5, 1 / 3), n, n_seeds, seed):
        print(f"{r['A']:5.2f} {r['k']:6.3f} {r['predicted']:12.4e} {r['spread']:13.4e} {r['empirical']:12.4e}")


def circuit_comparison(d, n, n_seeds, seed):
    rho = qm.random_state(d, make_rng(seed, d))
    print(f"\nd = {d}: element, Var shift (k=1), Var MUB (k=d), ratio")
    for i, j in [(0, 0), (0, 1), (d - 1, 0)]:
        out = {}
        for v, (variant, k) in enumerate((("shift", 1.0), ("mub", float(d)))):
            spec = state_spec(rho, i, j, variant, 0)
            est = [sample_hadamard(spec, ShotPlan(n, 0, k), make_rng(seed, d, i, j, v, s)).estimate
                   for s in range(n_seeds)]
            out[variant] = np.var(est, ddof=1)
        print(f"  rho[{i},{j}]  {out['shift']:.3e}  {out['mub']:.3e}  {out['mub'] / out['shift']:.2f}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--n-seeds", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    law_table(args.n, args.n_seeds, args.seed)
    for d in (2, 3, 5):
        circuit_comparison(d, args.n, args.n_seeds, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
