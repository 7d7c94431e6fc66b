"""Asymptotic variance constant and the long-range Kac-Rice approximation.

Run: python3 demos/variance_terms.py
"""
import math

from sphcrit.densities import CriticalKind, Interval, nu
from sphcrit.densities import p_density
from sphcrit.kacrice import QArgument, approx_variance, k1_interval, q_eval

iv = Interval(0.5, math.inf)
print(f"nu(saddle, {iv}) = {nu(CriticalKind.SADDLE, iv):.6f}")
for ell in (20, 30, 50, 100):
    av = approx_variance(ell, CriticalKind.SADDLE, iv)
    en = k1_interval(ell, iv, CriticalKind.SADDLE, method="closed")
    print(f"ell={ell:4d}: ell^3 nu = {ell ** 3 * nu('s', iv):10.2f}, approx_variance = {av:10.2f}, E N = {en:8.2f}")

# at zero conditional correlation the two-point expectation factorizes into p1 p1 / 8
arg = QArgument([0.0] * 8, 1.0, 1.0)
print(f"p1(1)^2 / 8 = {float(p_density(1, 'c', 1.0)) ** 2 / 8:.8f}")
for m in ("polar", "gh", "mc"):
    print(f"q(0; 1, 1) by {m:5s}: {q_eval(arg, m):.8f}")
