#!/usr/bin/env python3
"""Convergence study for the cell-count knob of the kernel discretization.

For a range of grid resolutions this prints, per statistics:
  * the eigenvalue clamp (how far the discrete spectrum leaves [0, 1]),
  * the trace error against kappa(0) |window|,
  * the error of the discrete pair correlation at a reference separation,
  * sampled mean counts against the expected value.

Usage: python scripts/discretization_study.py [--replicas 400] [--seed 1]
"""

import argparse
import math

import numpy as np

from freegas import kernels as K
from freegas import samplers as S


def study_fermion(cells_list, replicas, seed):
    kern = K.build_kernel(K.zero_temperature(math.pi, d=1))
    window = S.Window((10.0,))
    print(f"fermion zero-T kf=pi on L=10, target mean count {kern.kappa0 * window.volume:.6f}")
    print(f"{'cells':>6} {'clamp':>10} {'trace err':>10} {'g2 err':>10} {'mean':>8} {'3se':>7}")
    r_ref = 0.5
    g_ref = 1.0 - (kern.evaluate(np.array([r_ref])) / kern.kappa0) ** 2
    for cells in cells_list:
        grid = S.GridDiscretization(window, (cells,))
        disc = S.discretize_kernel(kern, grid, clamp_limit=np.inf)
        trace_err = abs(disc.trace - kern.kappa0 * window.volume)
        # discrete pair correlation at the nearest center separation to r_ref
        h = grid.cell_sizes[0]
        k = max(1, round(r_ref / h))
        g_disc = 1.0 - (disc.matrix[0, k] / (kern.kappa0 * grid.cell_volume)) ** 2
        configs = [S.sample_fermion(disc, S.replica_rng(seed, r)) for r in range(replicas)]
        mean, var = S.count_statistics(configs)
        se = math.sqrt(var / replicas)
        print(
            f"{cells:>6} {disc.clamp_magnitude:>10.2e} {trace_err:>10.2e} "
            f"{abs(g_disc - g_ref):>10.2e} {mean:>8.4f} {3 * se:>7.4f}"
        )


def study_boson(cells_list, replicas, seed):
    dens = K.bose_gas(1.0 / (4 * math.pi), 0.5, d=1)
    kern = K.build_kernel(dens)
    window = S.Window((10.0,))
    print(f"\nboson z=0.5 beta=1/(4pi) on L=10, target mean count {kern.kappa0 * window.volume:.6f}")
    print(f"{'cells':>6} {'field var dev':>14} {'mean':>8} {'3se':>7}   (dev is MC noise from 200 syntheses)")
    for cells in cells_list:
        grid = S.GridDiscretization(window, (cells,))
        synth = S.BosonFieldSynthesizer.build(dens, grid)
        fields = [np.mean(np.abs(synth.field(S.replica_rng(seed + 1, r))) ** 2) for r in range(200)]
        configs = [S.sample_boson(synth, S.replica_rng(seed + 2, r)) for r in range(replicas)]
        mean, var = S.count_statistics(configs)
        se = math.sqrt(var / replicas)
        print(
            f"{cells:>6} {abs(np.mean(fields) - kern.kappa0):>14.2e} {mean:>8.4f} {3 * se:>7.4f}"
        )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replicas", type=int, default=400)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--cells", default="32,64,128,256,512,1024")
    args = ap.parse_args()
    cells_list = [int(c) for c in args.cells.split(",")]
    study_fermion(cells_list, args.replicas, args.seed)
    study_boson(cells_list, args.replicas, args.seed)


if __name__ == "__main__":
    main()
