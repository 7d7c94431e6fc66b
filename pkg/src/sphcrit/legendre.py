"""Legendre polynomials, their first four derivatives, Hilb-type asymptotics
and fully normalized associated Legendre functions."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import lgamma, sqrt

import numpy as np

from .errors import DomainError

DEFAULT_C = 2.0
MAX_DEGREE = 10_000

# Calibrated multipliers for HilbJet.error_bounds (P, P', P'', P''', P'''').
# Obtained from calibrate_hilb_kappa() with its default arguments. The third
# and fourth derivative expansions carry a relative O(1/ell) error, so their
# measured remainders grow like ell^(3/2) and ell^(5/2) at fixed phi and the
# last two constants are only meaningful for ell <= 200.
HILB_KAPPA = np.array([
    0.49914758145891713,
    1.256396915892982,
    2.0212875079696455,
    2473.473531133186,
    2401859.4678505603,
])


def lambda_ell(ell: int) -> int:
    """Laplace eigenvalue ell*(ell+1)."""
    return ell * (ell + 1)


@dataclass(frozen=True)
class LegendreJet:
    """P_ell and derivatives 0..4 at x; values has shape (5,) + shape(x)."""

    ell: int
    x: np.ndarray | float
    values: np.ndarray


@dataclass(frozen=True)
class HilbJet:
    ell: int
    phi: np.ndarray | float
    asymptotic_values: np.ndarray
    error_bounds: np.ndarray


def _check_degree(ell):
    if int(ell) != ell or ell < 0 or ell > MAX_DEGREE:
        raise DomainError(f"degree must be an integer in [0, {MAX_DEGREE}], got {ell}")
    return int(ell)


def jet_recurrence(ell: int, x, order: int = 4):
    """Derivatives 0..order of P_ell at x by the differentiated Bonnet recurrence.

    (n+1) P_{n+1}^(k) = (2n+1) (x P_n^(k) + k P_n^(k-1)) - n P_{n-1}^(k)

    Works for numpy arrays and for scalar types with ordinary arithmetic
    (floats, mpmath numbers); returns a list of length order+1.
    """
    zero = x * 0
    one = zero + 1
    prev = [one] + [zero] * order
    if ell == 0:
        return prev
    cur = [x, one] + [zero] * (order - 1)
    for n in range(1, ell):
        nxt = [None] * (order + 1)
        nxt[0] = ((2 * n + 1) * x * cur[0] - n * prev[0]) / (n + 1)
        for k in range(1, order + 1):
            nxt[k] = ((2 * n + 1) * (x * cur[k] + k * cur[k - 1]) - n * prev[k]) / (n + 1)
        prev, cur = cur, nxt
    return cur[: order + 1]


def legendre_jet(ell: int, x) -> LegendreJet:
    """P_ell(x), P', P'', P''', P'''' via stable upward recurrences."""
    ell = _check_degree(ell)
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0) or np.any(~np.isfinite(xa)):
        raise DomainError("legendre_jet needs |x| <= 1")
    values = np.stack(jet_recurrence(ell, xa))
    return LegendreJet(ell, x, values)


def _hilb_bounds(ell, phi):
    return np.stack([
        ell ** -2.5 * phi ** -2.5 + ell ** -1.5 * phi ** -0.5,
        ell ** -0.5 * phi ** -2.5,
        ell ** 0.5 * phi ** -3.5,
        ell ** 0.5 * phi ** -5.5,
        ell ** 0.5 * phi ** -7.5,
    ])


def hilb_values(ell: int, phi):
    """Asymptotic values of P_ell^(k)(cos phi), k = 0..4 (no domain check)."""
    phi = np.asarray(phi, dtype=float)
    L = float(ell)
    s = np.sin(phi)
    c = np.cos(phi)
    eps = 1.0 / (8.0 * L * phi)
    c0 = sqrt(2.0 / np.pi)

    def pm(k):
        base = (L + k + 0.5) * phi
        return base - np.pi / 4, base + np.pi / 4

    m0, p0 = pm(0)
    m1, p1 = pm(1)
    mm1, pm1 = pm(-1)
    m2, p2 = pm(2)
    mm2, pmm2 = pm(-2)

    P0 = c0 * L ** -0.5 * s ** -0.5 * (np.cos(m0) - eps * np.cos(p0))
    P1 = c0 * L ** 0.5 * s ** -1.5 * (np.sin(m0) - eps * np.sin(p0))
    P2 = (c0 * L ** 1.5 * s ** -2.5 * (-np.cos(m0) + eps * np.cos(p0))
          - c0 * L ** 0.5 * s ** -3.5 * (np.cos(pm1) + eps * np.cos(mm1)))
    P3 = (c0 * L ** 2.5 * s ** -3.5 * (np.cos(p0) + eps * np.cos(m0))
          - c0 * L ** 1.5 * s ** -4.5 * (0.5 * (np.cos(m1) + 5 * np.cos(mm1))
                                         - eps * 0.5 * (np.cos(p1) + 5 * np.cos(pm1)))
          + c0 * L ** 0.5 * s ** -5.5 * (3 * c * np.sin(mm1) - eps * 3 * c * np.sin(pm1)))
    w = 3 * (5 - 4 * s ** 2)
    P4 = (c0 * L ** 3.5 * s ** -4.5 * (np.cos(m0) - eps * np.cos(p0))
          + c0 * L ** 2.5 * s ** -5.5 * (-1.5 * (np.sin(m1) + 3 * np.sin(mm1))
                                         + eps * 1.5 * (np.sin(p1) + 3 * np.sin(pm1)))
          + c0 * L ** 1.5 * s ** -6.5 * (-0.5 * (np.cos(m2) + 16 * np.cos(m0) + 13 * np.cos(mm2))
                                         + eps * 0.5 * (np.cos(p2) + 16 * np.cos(p0) + 13 * np.cos(pmm2)))
          + c0 * L ** 0.5 * s ** -7.5 * (-w * np.cos(pm1) - eps * w * np.cos(mm1)))
    return np.stack([P0, P1, P2, P3, P4])


def hilb_jet(ell: int, phi, C: float = DEFAULT_C) -> HilbJet:
    """Uniform asymptotic approximation of the Legendre jet at cos(phi).

    Valid for C/ell <= phi <= pi/2. error_bounds are the remainder scales
    (not multiplied by HILB_KAPPA).
    """
    ell = _check_degree(ell)
    if ell < 1:
        raise DomainError("hilb_jet needs ell >= 1")
    ph = np.asarray(phi, dtype=float)
    if np.any(ph < C / ell) or np.any(ph > np.pi / 2 + 1e-15):
        raise DomainError(f"phi must lie in [C/ell, pi/2] = [{C / ell}, {np.pi / 2}]")
    return HilbJet(ell, phi, hilb_values(ell, ph), _hilb_bounds(ell, ph))


def hilb_ratio(ell: int, phi, C: float = DEFAULT_C) -> np.ndarray:
    """|exact - asymptotic| / error_bound for each derivative order."""
    hj = hilb_jet(ell, phi, C)
    exact = legendre_jet(ell, np.cos(np.asarray(phi, dtype=float))).values
    return np.abs(exact - hj.asymptotic_values) / hj.error_bounds


def calibrate_hilb_kappa(ells=(20, 50, 100, 200), n_phi: int = 64, C: float = DEFAULT_C):
    """Twice the worst observed error/bound ratio, per derivative order."""
    worst = np.zeros(5)
    for ell in ells:
        phi = np.linspace(C / ell, np.pi / 2, n_phi)
        worst = np.maximum(worst, hilb_ratio(ell, phi, C).max(axis=1))
    return 2.0 * worst


# ---------------------------------------------------------------------------
# associated Legendre functions


def _sectoral_log(m: int) -> float:
    # log(Pbar_m^m / sin^m) = log(sqrt(2m+1) sqrt((2m)!) / (2^m m!))
    return 0.5 * np.log(2 * m + 1) + 0.5 * lgamma(2 * m + 1) - m * np.log(2.0) - lgamma(m + 1)


def assoc_legendre_all(ell: int, x) -> np.ndarray:
    """Pbar_ell^m(x) for m = 0..ell, shape (ell+1,) + shape(x).

    Normalization: Pbar = sqrt((2 ell + 1) (ell-m)!/(ell+m)!) P_ell^m, with no
    Condon-Shortley phase. Real harmonics Pbar_0 and sqrt(2) Pbar_m cos/sin(m phi)
    then obey sum_m Y_m(x) Y_m(y) = (2 ell + 1) P_ell(cos d(x, y)).

    m-upward sectoral start, then ell-upward three-term recurrence per m.
    Sectoral values are carried in log form to avoid underflow near the poles.
    """
    ell = _check_degree(ell)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise DomainError("assoc_legendre needs |x| <= 1")
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    with np.errstate(divide="ignore"):
        log_s = np.log(s)
    out = np.empty((ell + 1,) + x.shape)
    for m in range(ell + 1):
        with np.errstate(invalid="ignore"):
            lv = _sectoral_log(m) + (m * log_s if m else 0.0)
        pmm = np.exp(lv) if m else np.ones_like(x)
        if m and np.any(s == 0):
            pmm = np.where(s == 0, 0.0, pmm)
        if m == ell:
            out[m] = pmm
            continue
        # Pbar_{m+1}^m = sqrt(2m+3) x Pbar_m^m
        p_prev, p_cur = pmm, np.sqrt(2 * m + 3) * x * pmm
        for n in range(m + 1, ell):
            a = np.sqrt((2 * n + 1) * (2 * n + 3) / ((n + 1 - m) * (n + 1 + m)))
            b = np.sqrt((2 * n + 3) * (n - m) * (n + m) / ((2 * n - 1) * (n + 1 - m) * (n + 1 + m)))
            p_prev, p_cur = p_cur, a * x * p_cur - b * p_prev
        out[m] = p_cur
    return out


def assoc_legendre(ell: int, m: int, x):
    """Fully normalized associated Legendre function Pbar_ell^m(x), 0 <= m <= ell."""
    ell = _check_degree(ell)
    if int(m) != m or m < 0 or m > ell:
        raise DomainError(f"order m must satisfy 0 <= m <= ell, got m={m}, ell={ell}")
    return assoc_legendre_all(ell, x)[int(m)]


@lru_cache(maxsize=64)
def sectoral_scale(ell: int) -> float:
    """Pbar_ell^ell(x) / sin(theta)^ell."""
    return float(np.exp(_sectoral_log(ell)))
