"""Empirical distribution of critical values against the limiting cdf.

Run: python3 demos/cdf_convergence.py
"""
import numpy as np

from sphcrit.experiments import simulate, sup_distances

for ell in (10, 25, 50):
    d = np.array([sup_distances(r, ell) for r in simulate(ell, 10, seed=12345)])
    print(f"ell={ell:3d}: median sup|F* - F_inf| = {np.median(d[:, 0]):.4f}, "
          f"max sup|F* - F| - |1 - N/EN| = {np.max(d[:, 1] - d[:, 2]):.2e}")
