#!/usr/bin/env python3
"""Low-temperature limit of the invariant entropy.

For any Hamiltonian with ground multiplicity n0, the invariant entropy of
the thermal state approaches ln(n0) as beta grows: the population collapses
onto the ground level and the surviving term is the mixedness credit of its
degenerate subspace. Runs the zero-field mean-field magnet by default,
whose ground level is the doublet m = +-N/2.
"""
import argparse

import numpy as np

import gaugetherm as gt


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--j", type=float, default=1.0)
    ap.add_argument("--n-spins", type=int, default=50)
    ap.add_argument("--b-field", type=float, default=0.0)
    ap.add_argument("--points", type=int, default=12)
    ap.add_argument("--beta-min", type=float, default=0.01)
    args = ap.parse_args()

    h = gt.curie_weiss(args.j, args.n_spins, args.b_field)
    probe = gt.third_law_scan(h, np.array([1.0]))
    beta_max = 1e6 / probe.gap if probe.gap else 1e6
    scan = gt.third_law_scan(h, np.geomspace(args.beta_min, beta_max, args.points))

    print(f"ground multiplicity {scan.ground_multiplicity}, gap {scan.gap:.6g}")
    print(f"limit ln(n0) = {np.log(scan.ground_multiplicity):.12f}")
    for beta, s in zip(scan.betas, scan.s_gt):
        print(f"beta = {beta:12.5g}   s_gt = {s:.12f}")
    print(f"final deviation from limit: {abs(scan.s_gt[-1] - np.log(scan.ground_multiplicity)):.2e}")


if __name__ == "__main__":
    main()
