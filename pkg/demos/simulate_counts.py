"""Sample a few realizations, find their critical points and compare counts.

Run: python3 demos/simulate_counts.py [ell] [realizations]
"""
import sys

import numpy as np

from sphcrit.densities import REAL_LINE, expected_count
from sphcrit.experiments import quality_stats, simulate
from sphcrit.kacrice import k1_interval

ell = int(sys.argv[1]) if len(sys.argv) > 1 else 20
n = int(sys.argv[2]) if len(sys.argv) > 2 else 20
res = simulate(ell, n, seed=12345)
counts = np.array([len(r.values) for r in res])
print(f"ell={ell}, {n} realizations: {quality_stats(res)}")
print(f"max+min-saddle over all realizations: {sorted({r.n_max + r.n_min - r.n_saddle for r in res})}")
print(f"mean count {counts.mean():.1f} +/- {counts.std(ddof=1) / np.sqrt(n):.1f}")
print(f"leading term {expected_count(ell, 'c'):.1f}, finite degree {k1_interval(ell, REAL_LINE, 'c', method='closed'):.1f}")
