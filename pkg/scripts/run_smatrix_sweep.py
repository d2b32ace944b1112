#!/usr/bin/env python3
"""Sweep the scattering matrix over an energy window and print a table.

Example:

    python scripts/run_smatrix_sweep.py --preset D --lo 0.5 --hi 2.5 -n 9
"""

import argparse

import numpy as np

from ends_scatter.fourier import scattering_matrix
from ends_scatter.mode_reduction import RadialGrid
from ends_scatter.oracle import closed_form_scattering
from ends_scatter.presets import by_name


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="D",
                    choices=("free", "A", "B", "C", "D"))
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=2.5)
    ap.add_argument("-n", type=int, default=9)
    ap.add_argument("--rmax", type=float, default=60.0)
    ap.add_argument("--dx", type=float, default=0.01)
    args = ap.parse_args()

    model = by_name(args.preset)
    grid = RadialGrid(args.rmax, args.dx)
    lam0 = max(e.lambda0 for e in model.ends)
    print(f"model {model.name}: thresholds "
          f"{[e.lambda0 for e in model.ends]}, grid rmax={args.rmax}")
    header = f"{'lambda':>8} {'|S11|':>9} {'|S21|':>9} {'defect':>10}"
    if args.preset == "D":
        header += f" {'|t|_oracle':>11}"
    print(header)
    for lam in np.linspace(args.lo, args.hi, args.n):
        sd = scattering_matrix(model, grid, float(lam0 + lam))
        b = sd.block(0)
        line = (f"{lam0 + lam:8.4f} {abs(b[0, 0]):9.6f} {abs(b[1, 0]):9.6f} "
                f"{sd.unitarity_defect:10.2e}")
        if args.preset == "D":
            oc = closed_form_scattering("square_well", float(lam0 + lam),
                                        v0=1.5, half_width=1.0)
            line += f" {abs(oc['t']):11.6f}"
        print(line)


if __name__ == "__main__":
    main()
