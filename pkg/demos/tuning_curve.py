"""Where the error bound is meaningful, and where it is tightest.

Prints the calibrated lambda range for a sparse signal and the certified
radius at a handful of tuning values, next to the small-noise estimate.
"""

import math
import sys

import numpy as np

from lassogeom import (L1, SeedSpec, calibrate, delta_l1_closed_form, generate_sparse_signal,
                       regularized_bound, sharp_estimate)


def main(n=340, k=10, m=140):
    geom = L1(n).geometry(generate_sparse_signal(n, k, SeedSpec(0)))
    rep = calibrate(geom, m)
    if not rep.feasible:
        print(f"m={m} is too small: delta exceeds m-1 for every lambda")
        return 1
    print(f"n={n} k={k} m={m}")
    print(f"lambda range ({rep.lam_min:.4f}, {rep.lam_max:.4f}), best {rep.lam_best:.4f}, "
          f"delta_best {rep.delta_best:.3f}")
    print(f"{'lambda':>8} {'delta':>9} {'slack':>7} {'l(t)/|z|':>9} {'sharp/|z|':>9}")
    for lam in np.linspace(rep.lam_min, rep.lam_max, 9)[1:-1]:
        d = float(delta_l1_closed_form(n, k, lam))
        slack = math.sqrt(m - 1) - math.sqrt(d)
        ell = regularized_bound(m, d, 0.5 * slack, 1.0).value
        print(f"{lam:8.4f} {d:9.3f} {slack:7.3f} {ell:9.4f} {sharp_estimate(m, d, 1.0):9.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main(*map(int, sys.argv[1:])))
