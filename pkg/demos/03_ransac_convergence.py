#!/usr/bin/env python3
"""Running-best warp error of a fixed-budget RANSAC with half the frames wrong.

Outliers replace whole frames by mismatched regions; 1 px noise on the rest.
"""

import numpy as np

from rdct.bench import study_convergence

rows, curves = study_convergence(30, iters=25, outlier_frac=0.5, seed=5, sigma_px=1.0)

best = curves["best"].mean(axis=0)
rnd = curves["random"].mean(axis=0)
print(f"{'iter':>4s} {'best':>10s} {'random':>10s}")
for k in range(len(best)):
    print(f"{k + 1:4d} {best[k]:10.3f} {rnd[k]:10.3f}")

# Medians are less sensitive to the scenes that have not found an inlier yet.
print("median after 25 iterations:", np.median(curves["best"][:, -1]), np.median(curves["random"][:, -1]))
