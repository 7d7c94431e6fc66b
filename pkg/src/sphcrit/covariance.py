"""Covariance of gradient and Hessian of a random spherical harmonic at one
and two points on the equator, and the conditional Hessian covariance given
vanishing gradients.

Points are x = (pi/2, phi) and y = (pi/2, 0) in (colatitude, longitude); the
frame at each point is (d/dtheta, d/dphi). Hessian components are ordered
(e1e1, e1e2, e2e2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .legendre import jet_recurrence, lambda_ell, legendre_jet

DEFAULT_C_SHORT = 0.5
COND_LIMIT = 1e12


@dataclass(frozen=True)
class OnePointCov:
    ell: int
    a_block: np.ndarray
    b_block: np.ndarray
    c_block: np.ndarray


@dataclass(frozen=True)
class TwoPointCov:
    ell: int
    phi: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    @property
    def full(self) -> np.ndarray:
        """The 10x10 covariance of (grad x, grad y, hess x, hess y)."""
        return np.block([[self.A, self.B], [self.B.T, self.C]])


@dataclass(frozen=True)
class ConditionalCov:
    ell: int
    phi: float
    delta: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    a_vec: np.ndarray


def _hessian_block(lam):
    return [
        [lam * (3 * lam - 2) / 8, 0 * lam, lam * (lam + 2) / 8],
        [0 * lam, lam * (lam - 2) / 8, 0 * lam],
        [lam * (lam + 2) / 8, 0 * lam, lam * (3 * lam - 2) / 8],
    ]


def one_point_cov(ell: int) -> OnePointCov:
    """Covariance of (grad f, hess f) at a single point."""
    if int(ell) != ell or ell < 2:
        raise DomainError("one_point_cov needs an integer ell >= 2")
    lam = float(lambda_ell(int(ell)))
    return OnePointCov(int(ell), lam / 2 * np.eye(2), np.zeros((2, 3)), np.array(_hessian_block(lam)))


def coefficients(lam, s, c, d1, d2, d3, d4):
    """alpha, beta, gamma from sin/cos of the distance and P', ..., P''''."""
    alpha = [d1, -s * s * d2 + c * d1]
    beta = [s * d2, s * c * d2 + s * d1, -s ** 3 * d3 + 3 * s * c * d2 + s * d1]
    gamma = [
        (2 + c * c) * d2 + c * d1,
        -s * s * d3 + c * d2,
        -s * s * c * d3 + (-2 * s * s + c * c) * d2 + c * d1,
        s ** 4 * d4 - 6 * s * s * c * d3 + (-4 * s * s + 3 * c * c) * d2 + c * d1,
    ]
    return alpha, beta, gamma


def assemble(lam, alpha, beta, gamma):
    """Nested lists for A (4x4), B (4x6), C (6x6)."""
    z = 0 * lam
    h = lam / 2
    a1, a2 = alpha
    b1, b2, b3 = beta
    g1, g2, g3, g4 = gamma
    A = [[h, z, a1, z], [z, h, z, a2], [a1, z, h, z], [z, a2, z, h]]
    B = [
        [z, z, z, z, b1, z],
        [z, z, z, b2, z, b3],
        [z, -b1, z, z, z, z],
        [-b2, z, -b3, z, z, z],
    ]
    c0 = _hessian_block(lam)
    cphi = [[g1, z, g3], [z, g2, z], [g3, z, g4]]
    C = [c0[i] + cphi[i] for i in range(3)] + [cphi[i] + c0[i] for i in range(3)]
    return A, B, C


def _check_two_point(ell, phi):
    if int(ell) != ell or ell < 2:
        raise DomainError("two-point covariance needs an integer ell >= 2")
    if not (0.0 < phi <= math.pi / 2 + 1e-15):
        raise DomainError(f"phi must lie in (0, pi/2], got {phi}")


def two_point_cov(ell: int, phi: float) -> TwoPointCov:
    """Exact covariance of gradients and Hessians at two points at distance phi."""
    _check_two_point(ell, phi)
    ell = int(ell)
    lam = float(lambda_ell(ell))
    _, d1, d2, d3, d4 = legendre_jet(ell, math.cos(phi)).values
    alpha, beta, gamma = coefficients(lam, math.sin(phi), math.cos(phi), d1, d2, d3, d4)
    A, B, C = assemble(lam, alpha, beta, gamma)
    return TwoPointCov(ell, float(phi), np.array(A, dtype=float), np.array(B, dtype=float),
                       np.array(C, dtype=float), np.array(alpha), np.array(beta), np.array(gamma))


def inverse_gradient_block(lam, alpha):
    """Closed-form inverse of A: it splits into two 2x2 blocks, one per alpha."""
    A_inv = np.zeros((4, 4))
    for idx, a in ((0, alpha[0]), (1, alpha[1])):
        den = lam * lam - 4 * a * a
        i, j = idx, idx + 2
        A_inv[i, i] = A_inv[j, j] = 2 * lam / den
        A_inv[i, j] = A_inv[j, i] = -4 * a / den
    return A_inv


def explicit_a_vec(lam, alpha, beta, gamma) -> np.ndarray:
    """The eight perturbation entries written out in terms of alpha, beta, gamma."""
    a1, a2 = alpha
    b1, b2, b3 = beta
    g1, g2, g3, g4 = gamma
    d1 = lam * lam - 4 * a1 * a1
    d2 = lam * lam - 4 * a2 * a2
    return np.array([
        -16 * b2 * b2 / (lam * d2) - 2 / lam,
        -16 * b1 * b1 / (lam * d1) - 2 / lam,
        -16 * b3 * b3 / (lam * d2) - 2 / lam,
        -16 * b2 * b3 / (lam * d2) + 2 / lam,
        8 * (g1 - 4 * a2 * b2 * b2 / d2) / lam ** 2,
        8 * (g2 - 4 * a1 * b1 * b1 / d1) / lam ** 2,
        8 * (g4 - 4 * a2 * b3 * b3 / d2) / lam ** 2,
        8 * (g3 - 4 * a2 * b2 * b3 / d2) / lam ** 2,
    ])


def delta_from_a(a) -> np.ndarray:
    """Normalized conditional covariance built from a perturbation vector."""
    a = np.asarray(a, dtype=float)
    d1 = np.array([[3 + a[0], 0, 1 + a[3]], [0, 1 + a[1], 0], [1 + a[3], 0, 3 + a[2]]])
    d2 = np.array([[a[4], 0, a[7]], [0, a[5], 0], [a[7], 0, a[6]]])
    return np.block([[d1, d2], [d2, d1]])


def conditional_cov(ell: int, phi: float) -> ConditionalCov:
    """(8/lambda^2) times the Hessian covariance conditioned on both gradients vanishing."""
    tp = two_point_cov(ell, phi)
    lam = float(lambda_ell(tp.ell))
    # A is block diagonal up to permutation with blocks [[lam/2, a], [a, lam/2]]
    cond = max((lam / 2 + abs(a)) / (lam / 2 - abs(a)) if lam / 2 > abs(a) else math.inf
               for a in tp.alpha)
    if cond > COND_LIMIT:
        raise NumericError(f"gradient covariance is nearly singular (condition {cond:.3g})")
    A_inv = inverse_gradient_block(lam, tp.alpha)
    omega = tp.C - tp.B.T @ A_inv @ tp.B
    delta = 8.0 / lam ** 2 * omega
    delta = 0.5 * (delta + delta.T)
    d1 = delta[:3, :3].copy()
    d2 = delta[:3, 3:].copy()
    a_vec = np.array([d1[0, 0] - 3, d1[1, 1] - 1, d1[2, 2] - 3, d1[0, 2] - 1,
                      d2[0, 0], d2[1, 1], d2[2, 2], d2[0, 2]])
    return ConditionalCov(tp.ell, float(phi), delta, d1, d2, a_vec)


# ---------------------------------------------------------------------------
# short range: phi = psi / ell


def _check_short(ell, psi, c_short):
    if int(ell) != ell or ell < 2:
        raise DomainError("short-range covariance needs an integer ell >= 2")
    if not (0.0 < psi <= c_short):
        raise DomainError(f"psi must lie in (0, {c_short}], got {psi}")


def short_range_cov(ell: int, psi: float, c_short: float = DEFAULT_C_SHORT) -> TwoPointCov:
    """Two-point covariance at phi = psi/ell, rescaled so entries stay O(1).

    Gradient entries are divided by ell^2, gradient-Hessian entries by ell^3
    and Hessian entries by ell^4.
    """
    _check_short(ell, psi, c_short)
    ell = int(ell)
    tp = two_point_cov(ell, psi / ell)
    L = float(ell)
    return TwoPointCov(ell, float(psi), tp.A / L ** 2, tp.B / L ** 3, tp.C / L ** 4,
                       tp.alpha / L ** 2, tp.beta / L ** 3, tp.gamma / L ** 4)


def short_range_det(ell: int, psi: float, c_short: float = DEFAULT_C_SHORT, dps: int = 120):
    """Determinant of the rescaled 10x10 covariance, in extended precision.

    The determinant vanishes like psi^26, far below double precision
    round-off of the O(1) entries, so everything is evaluated with mpmath
    at ``dps`` digits. Returns an mpmath number.
    """
    import mpmath

    _check_short(ell, psi, c_short)
    ell = int(ell)
    with mpmath.workdps(dps):
        L = mpmath.mpf(ell)
        lam = L * (L + 1)
        phi = mpmath.mpf(psi) / L
        s, c = mpmath.sin(phi), mpmath.cos(phi)
        _, d1, d2, d3, d4 = jet_recurrence(ell, c)
        alpha, beta, gamma = coefficients(lam, s, c, d1, d2, d3, d4)
        A, B, C = assemble(lam, alpha, beta, gamma)
        M = mpmath.matrix(10, 10)
        for i in range(4):
            for j in range(4):
                M[i, j] = A[i][j] / L ** 2
            for j in range(6):
                M[i, 4 + j] = B[i][j] / L ** 3
                M[4 + j, i] = B[i][j] / L ** 3
        for i in range(6):
            for j in range(6):
                M[4 + i, 4 + j] = C[i][j] / L ** 4
        return mpmath.det(M)


def short_range_det_gradient(ell: int, psi: float, c_short: float = DEFAULT_C_SHORT) -> float:
    """Determinant of the rescaled gradient block, via its 2x2 factorization."""
    _check_short(ell, psi, c_short)
    sr = short_range_cov(ell, psi, c_short)
    h = (ell + 1) / (2.0 * ell)
    a1, a2 = sr.alpha
    return float(((h - a1) * (h + a1)) * ((h - a2) * (h + a2)))
