"""Desk-scale statistical consistency study.

As the sample size n grows with the schedule lambda_n = lambda0 * n^(-1/4)
and gap targets eps_n = lambda_n^4 = O(1/n), the fitted coefficients drift
toward the ground truth both in the coefficient norm and in L2 of the
input distribution.  The study below is a scaled-down version of the full
acceptance experiment (fewer trials, smaller grid) so it finishes in
about a minute; it also checks the deterministic coercivity radius bound
along a regularization path on one of the draws.
"""

from pathlib import Path

import numpy as np

from proxglm import (SyntheticSpec, consistency_experiment, generate,
                     regularization_path)
from proxglm.experiments import default_consistency_family

OUT = Path(__file__).resolve().parent / "demo_out"
OUT.mkdir(exist_ok=True)

spec = SyntheticSpec(dim=12, sparsity=3, coeff_seed=0, noise=0.1)
report = consistency_experiment(spec, n_grid=[100, 400, 1600], lambda0=0.5,
                                trials=8, master_seed=42)

print("consistency trend (medians over 8 trials):")
print("      n    lambda_n   med |u-u+|_r   med ||f-f+||_L2   flagged")
for n, lam, med_r, iqr_r, med_l2, iqr_l2, flagged in report.median_errors():
    print(f"  {n:5d}    {lam:.4f}     {med_r:.4f}         {med_l2:.4f}          {flagged}")

report.to_csv(OUT / "consistency_trials.csv", OUT / "consistency_summary.csv")
print(f"\nwrote {OUT / 'consistency_trials.csv'} and {OUT / 'consistency_summary.csv'}")

# Deterministic radius bound along a decreasing lambda grid: the norm of
# every epsilon-approximate solution stays inside an explicit ball whose
# radius grows as lambda shrinks.
reg = default_consistency_family(spec.dim)
data, u_truth = generate(spec, 400, seed=1, reg=reg)
grid = np.geomspace(0.5, 0.02, 6)
path = regularization_path(spec.dictionary, data, grid, reg, max_iters=1200,
                           u_truth=u_truth)
print("\nregularization path (coercivity radius check):")
print("  lambda     |u_lambda|_r   radius bound   |u_lambda - u+|_r")
for lam, nrm, bound, err in zip(path.lambdas, path.norms, path.radius_bounds,
                                path.truth_errors):
    print(f"  {lam:.4f}     {nrm:8.4f}     {bound:10.4f}     {err:.4f}")
path.to_csv(OUT / "path_report.csv")
print(f"\nwrote {OUT / 'path_report.csv'}")
