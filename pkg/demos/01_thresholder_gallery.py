"""Gallery of composite proximal thresholders.

Each scalar regularizer g = i_C + sigma_D + eta*|.|^r produces a different
thresholding map x -> prox_g(x): the D interval carves out a dead zone,
the power term bends the branches, and the C interval caps the output.
This script tabulates a few instructive members of the family and prints
checkpoints on each branch.

Equivalent CLI call for the last curve:

    proxglm prox-curve --d-lower 0 --d-upper 2 --c-upper 1.2 \
        --eta 0.9 --r 1.3333333333333333 --gamma 1.0 --out demo_out
"""

import csv
from pathlib import Path

import numpy as np

from proxglm import Interval, PowerPenalty, ScalarRegularizer, prox_scalar_exact

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

ETA = 0.9

# Symmetric thresholders: l1-style dead zone [-1, 1] plus a power penalty.
# Larger exponents shrink large inputs harder; r = 2 is a plain linear
# shrinkage beyond the dead zone.
symmetric = {
    "r=2": ScalarRegularizer(Interval.real(), Interval(-1, 1), PowerPenalty(ETA, 2.0)),
    "r=3/2": ScalarRegularizer(Interval.real(), Interval(-1, 1), PowerPenalty(ETA, 1.5)),
    "r=4/3": ScalarRegularizer(Interval.real(), Interval(-1, 1),
                               PowerPenalty(ETA, 4 / 3)),
}

# One-sided thresholder with a hard cap: only positive inputs are
# thresholded (D = [0, 2]) and the output may never exceed 6/5 (C).
capped = ScalarRegularizer(Interval(-np.inf, 6 / 5), Interval(0.0, 2.0),
                           PowerPenalty(ETA, 4 / 3))

xs = np.linspace(-4.0, 5.5, 381)
columns = {name: [prox_scalar_exact(reg, 1.0, float(x)) for x in xs]
           for name, reg in symmetric.items()}
columns["one-sided capped"] = [prox_scalar_exact(capped, 1.0, float(x)) for x in xs]

with open(OUT / "thresholder_gallery.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["x"] + list(columns))
    for i, x in enumerate(xs):
        writer.writerow([float(x)] + [columns[name][i] for name in columns])

print(f"wrote {OUT / 'thresholder_gallery.csv'}")
print("\ncheckpoints (gamma = 1):")
print(f"  r=2      at x=3.8  -> {prox_scalar_exact(symmetric['r=2'], 1.0, 3.8):.6f}"
      "   (linear branch (x-1)/2.8)")
print(f"  r=3/2    at x=2.0  -> {prox_scalar_exact(symmetric['r=3/2'], 1.0, 2.0):.6f}")
print(f"  r=4/3    at x=-3.0 -> {prox_scalar_exact(symmetric['r=4/3'], 1.0, -3.0):.6f}")
print(f"  capped   at x=1.0  -> {prox_scalar_exact(capped, 1.0, 1.0):.6f}"
      "   (dead zone [0, 2])")
print(f"  capped   at x=-1.0 -> {prox_scalar_exact(capped, 1.0, -1.0):.6f}"
      "   (negative side untouched by D)")
print(f"  capped   at x=5.5  -> {prox_scalar_exact(capped, 1.0, 5.5):.6f}"
      "   (hard cap 6/5)")
