"""Leading-order expected counts next to the exact finite-degree values.

Run: python3 demos/expected_counts.py
"""
import math

from sphcrit.densities import CriticalKind, Interval, REAL_LINE, expected_count
from sphcrit.kacrice import k1_interval

print(f"{'ell':>5} {'interval':>12} {'kind':>9} {'leading':>12} {'finite ell':>12} {'ratio':>8}")
for ell in (10, 30, 100, 200):
    for iv in (REAL_LINE, Interval(1.0, math.inf)):
        for kind in CriticalKind:
            lead = expected_count(ell, kind, iv)
            exact = k1_interval(ell, iv, kind, method="closed")
            print(f"{ell:5d} {str(iv):>12} {kind.value:>9} {lead:12.2f} {exact:12.2f} {exact / lead:8.5f}")
