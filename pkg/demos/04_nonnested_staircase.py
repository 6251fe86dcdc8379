"""Top flat zones need not shrink as the weight grows.

On the two-squares image the top zone at a smaller weight can stick out of
the top zone at a larger one. Grid effects blur this, so the script reports
the non-nested area in pixels next to the radial case, where the dual
slack sets are nested exactly.

    python demos/04_nonnested_staircase.py [n]
"""

import sys

import numpy as np

from tvsc.datagen import DatumSpec, generate
from tvsc.staircase import monotonicity_check, solve, staircase_set

n = int(sys.argv[1]) if len(sys.argv) > 1 else 128
g = generate(DatumSpec("two_squares", n=n))
lam_big, lam_small = 7 / 32, 11 / 64
big = staircase_set(solve(g, lam_big, 1e-6, max_iters=60000))
small = staircase_set(solve(g, lam_small, 1e-6, max_iters=60000))
extra = small & ~big
print(f"two squares at {n}^2")
print(f"  top zone at {lam_small:.4f}: {small.sum()} px,  at {lam_big:.4f}: {big.sum()} px")
print(f"  pixels in the smaller-weight zone but not the larger: {extra.sum()}")
if extra.any():
    ii, jj = np.nonzero(extra)
    X, Y = g.coords()
    print(f"  they sit near |x|, |y| <= {max(np.abs(X[ii, jj]).max(), np.abs(Y[ii, jj]).max()):.3f}")

prof = generate(DatumSpec("radial_profile", n=2048, extent=1.0, radial=True, seed=0))
rep = monotonicity_check(prof, [0.05, 0.1, 0.2, 0.3])
print(f"\nradial profile: dual slack sets nested = {rep.nested} (violations {sum(rep.violations):.0f})")
