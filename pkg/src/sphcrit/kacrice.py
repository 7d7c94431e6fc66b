"""Kac-Rice integrals for critical points of random spherical harmonics.

One-point density K_1 and expected counts at finite degree, the four
dimensional Gaussian expectation q(a; t1, t2), the two-point kernel K_2 and
its leading-order approximation L_2, the perturbation integrals A_0, A_i,
A_ij and the approximate variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.stats import qmc

from .covariance import coefficients, conditional_cov, delta_from_a, explicit_a_vec, two_point_cov
from .densities import (CriticalKind, Interval, REAL_LINE, _check_interval, p_density, p_density_integral,
                        p_integral, quad_line)
from .errors import DomainError, QuadratureError
from .legendre import DEFAULT_C, lambda_ell, legendre_jet

SQRT8 = math.sqrt(8.0)
Q_METHODS = ("polar", "gh", "mc")
DEFAULT_GH_NODES = 24
DEFAULT_MC_POINTS = 2 ** 16
PHI_TOL = 1e-4
PHI_MAX_PANELS = 2 ** 14


@dataclass(frozen=True)
class QArgument:
    """Perturbation vector a (8 entries) and conditioned values t1, t2."""

    a: np.ndarray
    t1: float
    t2: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        if a.size != 8:
            raise DomainError("perturbation vector must have 8 entries")
        object.__setattr__(self, "a", a)
        try:
            np.linalg.cholesky(delta_from_a(a))
        except np.linalg.LinAlgError:
            raise DomainError("Delta(a) is not positive definite") from None


@dataclass(frozen=True)
class KernelSample:
    phi: float
    t1: float
    t2: float
    k2: float
    l2: float


# ---------------------------------------------------------------------------
# one-point density


def _s_ratio(ell):
    lam = float(lambda_ell(ell))
    return lam, lam / (lam - 2.0)


def k1_density(ell: int, kind, t):
    """Expected number of critical points per unit critical value, 4 pi K_1(t).

    Given f = t the Hessian is -lambda t / 2 times the identity plus a
    traceless part whose squared norm is exponential with mean
    mu = lambda (lambda - 2) / 4, which gives the closed form.
    """
    kind = CriticalKind.parse(kind)
    if int(ell) != ell or ell < 2:
        raise DomainError("k1 needs an integer ell >= 2")
    lam, s = _s_ratio(int(ell))
    t = np.asarray(t, dtype=float)
    mu = lam * (lam - 2) / 4
    c = lam * lam * t * t / 4
    e = np.exp(-c / mu)
    if kind is CriticalKind.CRITICAL:
        val = c - mu + 2 * mu * e
    elif kind is CriticalKind.EXTREMUM:
        val = c - mu + mu * e
    else:
        val = mu * e
    return (4.0 / lam) * np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi) * val


def k1_density_integral(ell: int, kind, t: float) -> float:
    """4 pi K_1(t) from the 2-D Gaussian integral with the finite-degree factors."""
    lam, s = _s_ratio(int(ell))
    # gradient density at zero 1/(pi lambda), Hessian scale lambda^2/8
    return (lam / 2.0) * p_density_integral(1, kind, t, lam_ratio=s)


def k1_interval(ell: int, interval=REAL_LINE, kind=CriticalKind.CRITICAL, method: str = "integral",
                tol: float = 1e-9) -> float:
    """Expected number of critical points of the kind with value in the interval.

    ``integral`` integrates the 2-D Gaussian representation inside an outer
    adaptive quadrature over the interval; ``closed`` integrates the closed
    form density.
    """
    kind = CriticalKind.parse(kind)
    interval = _check_interval(interval)
    if int(ell) != ell or ell < 2:
        raise DomainError("k1_interval needs an integer ell >= 2")
    if method == "closed":
        return quad_line(lambda t: float(k1_density(ell, kind, t)), interval)
    if method != "integral":
        raise DomainError(f"unknown method {method!r}")
    from scipy import integrate

    lo = max(interval.lo, -12.0)
    hi = min(interval.hi, 12.0)
    if hi <= lo:
        return 0.0
    pts = [p for p in (0.0,) if lo < p < hi]
    val, err = integrate.quad(lambda t: k1_density_integral(ell, kind, t), lo, hi, points=pts or None,
                              epsabs=tol, epsrel=tol, limit=200)
    if not err <= max(1e-6 * abs(val), 1e-8):
        raise QuadratureError("k1 outer quadrature did not converge", estimate=val, error=err)
    return val


# ---------------------------------------------------------------------------
# q(a; t1, t2)

# v = L x + c with x = (z1, z2, w1, w2)
_L = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)


def _gaussian_slice(arg: QArgument):
    """Mean, precision and normalization of the Gaussian factor in (z, w)."""
    D = delta_from_a(arg.a)
    Dinv = np.linalg.inv(D)
    c = np.array([0, 0, SQRT8 * arg.t1, 0, 0, SQRT8 * arg.t2])
    M = _L.T @ Dinv @ _L
    b = _L.T @ Dinv @ c
    mu = -np.linalg.solve(M, b)
    const = c @ Dinv @ c + b @ mu
    norm = (2 * np.pi) ** -3 / math.sqrt(np.linalg.det(D)) * math.exp(-0.5 * const)
    return mu, M, norm


def _absdet(t, z1, z2, kind):
    d = z1 * SQRT8 * t - z1 * z1 - z2 * z2
    if kind is CriticalKind.EXTREMUM:
        return np.where(d > 0, d, 0.0)
    if kind is CriticalKind.SADDLE:
        return np.where(d < 0, -d, 0.0)
    return np.abs(d)


def _q_gh(arg, kinds, nodes):
    mu, M, norm = _gaussian_slice(arg)
    y, w = special.roots_hermitenorm(nodes)
    w = w / math.sqrt(2 * math.pi)
    Lc = np.linalg.cholesky(np.linalg.inv(M))
    Y = np.stack(np.meshgrid(y, y, y, y, indexing="ij"), -1).reshape(-1, 4)
    W = np.einsum("i,j,k,l->ijkl", w, w, w, w).ravel()
    X = mu + Y @ Lc.T
    g = _absdet(arg.t1, X[:, 0], X[:, 1], kinds[0]) * _absdet(arg.t2, X[:, 2], X[:, 3], kinds[1])
    return norm * (2 * np.pi) ** 2 / math.sqrt(np.linalg.det(M)) * math.fsum(W * g)


def _q_mc(arg, kinds, npts, seed=0):
    mu, M, norm = _gaussian_slice(arg)
    u = qmc.Sobol(4, scramble=True, seed=seed).random(npts)
    Y = special.ndtri(u)
    X = mu + Y @ np.linalg.cholesky(np.linalg.inv(M)).T
    g = _absdet(arg.t1, X[:, 0], X[:, 1], kinds[0]) * _absdet(arg.t2, X[:, 2], X[:, 3], kinds[1])
    return norm * (2 * np.pi) ** 2 / math.sqrt(np.linalg.det(M)) * float(np.mean(g))


def _polar_nodes(t, centre_gap, spread, n_r, n_th):
    """Polar nodes around (sqrt2 t, 0), radially split at the kink r = sqrt2 |t|."""
    kink = math.sqrt(2.0) * abs(t)
    rmax = kink + centre_gap + 9.0 * spread
    edges = [0.0]
    if kink > 0:
        edges.append(kink)
    # the outer range is long compared to the Gaussian width: split it
    k = int(math.ceil((rmax - edges[-1]) / (2.5 * spread)))
    edges += list(np.linspace(edges[-1], rmax, k + 1)[1:])
    x, w = np.polynomial.legendre.leggauss(n_r)
    r, wr = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r.append(0.5 * (b - a) * x + 0.5 * (b + a))
        wr.append(0.5 * (b - a) * w)
    r = np.concatenate(r)
    wr = np.concatenate(wr)
    th = 2 * np.pi * np.arange(n_th) / n_th
    R, TH = np.meshgrid(r, th, indexing="ij")
    WR = np.repeat(wr, n_th) * (2 * np.pi / n_th)
    z1 = math.sqrt(2.0) * t + (R * np.cos(TH)).ravel()
    z2 = (R * np.sin(TH)).ravel()
    return z1, z2, WR * R.ravel()


def _q_polar(arg, kinds, n_r=12, n_th=32):
    mu, M, norm = _gaussian_slice(arg)
    cov = np.linalg.inv(M)
    out = []
    for k, t in enumerate((arg.t1, arg.t2)):
        block = cov[2 * k:2 * k + 2, 2 * k:2 * k + 2]
        spread = math.sqrt(np.linalg.eigvalsh(block).max())
        gap = math.hypot(mu[2 * k] - math.sqrt(2.0) * t, mu[2 * k + 1])
        z1, z2, w = _polar_nodes(t, gap, spread, n_r, n_th)
        out.append((z1, z2, w * _absdet(t, z1, z2, kinds[k])))
    (z1, z2, wz), (w1, w2, ww) = out
    U = np.stack([z1 - mu[0], z2 - mu[1]], 1)
    V = np.stack([w1 - mu[2], w2 - mu[3]], 1)
    Ez = np.einsum("ni,ij,nj->n", U, M[:2, :2], U)
    Ew = np.einsum("ni,ij,nj->n", V, M[2:, 2:], V)
    B = 2.0 * M[:2, 2:] @ V.T
    total = []
    for lo in range(0, len(Ez), 1024):
        sl = slice(lo, lo + 1024)
        E = np.exp(-0.5 * (Ez[sl, None] + Ew[None, :] + U[sl] @ B))
        total.append(float((wz[sl] @ E) @ ww))
    return norm * math.fsum(total)


def q_eval(arg: QArgument, method: str = "polar", *, nodes: int = DEFAULT_GH_NODES,
           mc_points: int = DEFAULT_MC_POINTS, kinds=(CriticalKind.CRITICAL, CriticalKind.CRITICAL),
           seed: int = 0, polar_nodes: tuple = (12, 32)) -> float:
    """Gaussian expectation q(a; t1, t2) of the product of absolute Hessian determinants.

    ``polar`` (default) uses polar product rules centred where each
    determinant factor has its circular kink, so each radial panel is smooth.
    ``gh`` is a tensor Gauss-Hermite rule with ``nodes`` points per axis after
    completing the square; ``mc`` a scrambled Sobol average over ``mc_points``
    points. ``kinds`` restricts each factor to extrema or saddles.
    ``polar_nodes`` is (radial nodes per panel, angular nodes) for ``polar``.
    """
    if not isinstance(arg, QArgument):
        raise DomainError("q_eval expects a QArgument")
    kinds = tuple(CriticalKind.parse(k) for k in kinds)
    if method == "polar":
        return _q_polar(arg, kinds, *polar_nodes)
    if method == "gh":
        return _q_gh(arg, kinds, int(nodes))
    if method == "mc":
        return _q_mc(arg, kinds, int(mc_points), seed)
    raise DomainError(f"unknown q method {method!r}; choose from {Q_METHODS}")


def q_zero(t1, t2, kind=CriticalKind.CRITICAL):
    """q(0; t1, t2) = p_1(t1) p_1(t2) / 8."""
    return p_density(1, kind, t1) * p_density(1, kind, t2) / 8.0


def dq_da3_direct(t1: float, t2: float, kind=CriticalKind.CRITICAL) -> float:
    """First derivative of q in a_3 at a = 0, from its explicit integral.

    At a = 0 the integral factorizes into products of the 2-D integrals
    defining p_1 and p_2, each of which is evaluated numerically.
    """
    i1 = [p_density_integral(1, kind, t) for t in (t1, t2)]
    i2 = [p_density_integral(2, kind, t) for t in (t1, t2)]
    return (-6 * i1[0] * i1[1] + i2[0] * i1[1] + i1[0] * i2[1]) / 128.0


def dq_da(i: int, t1: float, t2: float, h: float = 1e-3, method: str = "polar", order: int = 1, **kw) -> float:
    """Central finite difference of q in a_i (1-based) at a = 0, first or second order."""
    if not 1 <= i <= 8:
        raise DomainError("index must be in 1..8")
    e = np.zeros(8)
    e[i - 1] = h
    qp = q_eval(QArgument(e, t1, t2), method, **kw)
    qm = q_eval(QArgument(-e, t1, t2), method, **kw)
    if order == 1:
        return (qp - qm) / (2 * h)
    q0 = q_eval(QArgument(np.zeros(8), t1, t2), method, **kw)
    return (qp - 2 * q0 + qm) / (h * h)


# ---------------------------------------------------------------------------
# kernels


def _check_long_range(ell, phi, C):
    if int(ell) != ell or ell < 2:
        raise DomainError("kernel needs an integer ell >= 2")
    if not (C / ell <= phi <= math.pi / 2 + 1e-15):
        raise DomainError(f"phi must lie in [C/ell, pi/2] = [{C / ell:.6g}, {math.pi / 2:.6g}]")


def _v_factors(kind, t1, t2):
    p1 = [p_density(1, kind, t) for t in (t1, t2)]
    p2 = [p_density(2, kind, t) for t in (t1, t2)]
    g = [(3 * a - b) / 8 for a, b in zip(p1, p2)]
    v1 = p1[0] * p1[1]
    v2 = (-3 * p1[0] * p1[1] + 0.5 * p2[0] * p1[1] + 0.5 * p1[0] * p2[1]) / 64
    v3 = g[0] * g[1] / 8
    return v1, v2, v3


def _l2_weights(ell, phi):
    """sin^4 P''^2 / 2, 32 sin^6 P'''^2 / ell^2 and 64 sin^8 P''''^2 / ell^4."""
    phi = np.asarray(phi, dtype=float)
    _, _, d2, d3, d4 = legendre_jet(ell, np.cos(phi)).values
    s = np.sin(phi)
    L = float(ell)
    return 0.5 * s ** 4 * d2 ** 2, 32 / L ** 2 * s ** 6 * d3 ** 2, 64 / L ** 4 * s ** 8 * d4 ** 2


def l2_kernel(ell: int, phi: float, t1: float, t2: float, kind=CriticalKind.CRITICAL) -> float:
    """Leading-order two-point kernel L_2.

    w1 v1 - w2 v2 + w3 v3 with v1 = p1 x p1,
    v2 = (-3 p1 x p1 + (p2 x p1 + p1 x p2) / 2) / 64 and v3 = g x g / 8 with
    g = (3 p1 - p2) / 8. The 1/8 in v3 is the value of the second a_7
    derivative of q at a = 0.
    """
    kind = CriticalKind.parse(kind)
    if not (0 < phi <= math.pi / 2 + 1e-15):
        raise DomainError("phi must lie in (0, pi/2]")
    w1, w2, w3 = _l2_weights(int(ell), phi)
    v1, v2, v3 = _v_factors(kind, t1, t2)
    return float(w1 * v1 - w2 * v2 + w3 * v3)


def k2_prefactor(ell: int, phi: float) -> float:
    lam = float(lambda_ell(ell))
    a1, a2 = two_point_cov(ell, phi).alpha
    return lam ** 4 / (8 * math.pi ** 2 * math.sqrt((lam * lam - 4 * a2 * a2) * (lam * lam - 4 * a1 * a1)))


def k2_kernel(ell: int, phi: float, t1: float, t2: float, C: float = DEFAULT_C, method: str = "polar",
              **kw) -> KernelSample:
    """Two-point correlation K_2 in the long-range regime phi >= C/ell."""
    _check_long_range(ell, phi, C)
    a = conditional_cov(ell, phi).a_vec
    k2 = k2_prefactor(ell, phi) * q_eval(QArgument(a, t1, t2), method, **kw)
    return KernelSample(float(phi), float(t1), float(t2), float(k2), l2_kernel(ell, phi, t1, t2))


# ---------------------------------------------------------------------------
# phi integrals


def phi_quad(fun, lo: float, hi: float, tol: float = PHI_TOL, max_panels: int = PHI_MAX_PANELS,
             start_panels: int = 16, order: int = 8):
    """Composite Gauss-Legendre over [lo, hi] with panel doubling.

    ``fun`` maps an array of angles to an array of shape (k, n) or (n,).
    Doubling stops when every component changes by less than tol relative to
    its size (with a floor at tol * 1e-3 of the largest component). Sums are
    compensated. Returns (values, panels).
    """
    x, w = np.polynomial.legendre.leggauss(order)

    def level(n):
        edges = np.linspace(lo, hi, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x).ravel()
        weights = (half[:, None] * w).ravel()
        vals = np.atleast_2d(fun(nodes)) * weights
        return np.array([math.fsum(row) for row in vals])

    n = start_panels
    prev = level(n)
    while True:
        n *= 2
        cur = level(n)
        floor = tol * 1e-3 * np.max(np.abs(cur))
        if np.all(np.abs(cur - prev) <= tol * np.maximum(np.abs(cur), floor)):
            return cur, n
        if n >= max_panels:
            raise QuadratureError(f"phi quadrature did not converge with {n} panels", estimate=cur,
                                  error=np.abs(cur - prev))
        prev = cur


def _a_and_weight(ell, phi):
    lam = float(lambda_ell(ell))
    _, d1, d2, d3, d4 = legendre_jet(ell, np.cos(phi)).values
    alpha, beta, gamma = coefficients(lam, np.sin(phi), np.cos(phi), d1, d2, d3, d4)
    a = explicit_a_vec(lam, alpha, beta, gamma)
    w = np.sin(phi) / np.sqrt((1 - 4 * alpha[1] ** 2 / lam ** 2) * (1 - 4 * alpha[0] ** 2 / lam ** 2))
    return a, w


def a_term_integrals(ell: int, C: float = DEFAULT_C, tol: float = PHI_TOL) -> dict:
    """A_0, A_i (i = 1..8) and A_ij (i <= j) over [C/ell, pi/2].

    Keys are "A0", "A1".."A8" and "A11", "A12", ..., "A88".
    """
    if int(ell) != ell or ell < 10:
        raise DomainError("a_term_integrals needs ell >= 10")
    ell = int(ell)
    pairs = [(i, j) for i in range(8) for j in range(i, 8)]

    def fun(phi):
        a, w = _a_and_weight(ell, phi)
        rows = [w] + [a[i] * w for i in range(8)] + [a[i] * a[j] * w for i, j in pairs]
        return np.stack(rows)

    vals, _ = phi_quad(fun, C / ell, math.pi / 2, tol=tol)
    out = {"A0": float(vals[0])}
    for i in range(8):
        out[f"A{i + 1}"] = float(vals[1 + i])
    for k, (i, j) in enumerate(pairs):
        out[f"A{i + 1}{j + 1}"] = float(vals[9 + k])
    return out


def l2_phi_integrals(ell: int, C: float = DEFAULT_C, tol: float = PHI_TOL) -> np.ndarray:
    """Integrals over [C/ell, pi/2] of the three L_2 weights times sin(phi)."""
    if int(ell) != ell or ell < 2:
        raise DomainError("needs an integer ell >= 2")
    vals, _ = phi_quad(lambda phi: np.stack(_l2_weights(int(ell), phi)) * np.sin(phi), C / ell, math.pi / 2,
                       tol=tol)
    return vals


def approx_variance(ell: int, kind=CriticalKind.CRITICAL, interval=REAL_LINE, C: float = DEFAULT_C,
                    tol: float = PHI_TOL) -> float:
    """Variance from the L_2 kernel integrated over I x I and phi in [C/ell, pi/2].

    The t-integrals factor through the closed-form integrals of p_1 and p_2
    of the requested kind.
    """
    kind = CriticalKind.parse(kind)
    interval = _check_interval(interval)
    if int(ell) != ell or ell < 10:
        raise DomainError("approx_variance needs ell >= 10")
    P1 = p_integral(1, kind, interval)
    P2 = p_integral(2, kind, interval)
    V1 = P1 * P1
    V2 = (-3 * P1 * P1 + P1 * P2) / 64
    V3 = ((3 * P1 - P2) / 8) ** 2 / 8
    J = l2_phi_integrals(int(ell), C, tol)
    return float(J[0] * V1 - J[1] * V2 + J[2] * V3)


def a0_residual(ell: int, interval=REAL_LINE, kind=CriticalKind.CRITICAL, C: float = DEFAULT_C) -> dict:
    """Terms of the A_0 cancellation against the squared expectation.

    Returns the leading term 2 lambda^2 A_0 (int q(0)), the squared expected
    count, and their difference with and without the ell^3 P_1^2 / 4
    correction that comes from the 2 alpha_2^2 / lambda^2 part of A_0 and the
    finite-degree part of the expectation.
    """
    kind = CriticalKind.parse(kind)
    interval = _check_interval(interval)
    lam = float(lambda_ell(ell))
    A0 = a_term_integrals(ell, C)["A0"]
    P1 = p_integral(1, kind, interval)
    lead = 2 * lam * lam * A0 * P1 * P1 / 8
    E = k1_interval(ell, interval, kind, method="closed")
    raw = lead - E * E
    return {"A0": A0, "leading": lead, "expected_sq": E * E, "raw": raw,
            "corrected": raw - ell ** 3 * P1 * P1 / 4}
