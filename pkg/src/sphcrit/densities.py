"""Limiting densities of critical values, variance constants, expected
counts and the limiting distribution function."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import DomainError, NumericError

SQRT2PI = math.sqrt(2.0 * math.pi)
SQRT3 = math.sqrt(3.0)
SQRT8PI = math.sqrt(8.0 * math.pi)
TWO_OVER_ROOTPI = math.sqrt(2.0) / math.sqrt(math.pi)  # sqrt(2)/sqrt(pi)


class CriticalKind(enum.Enum):
    CRITICAL = "critical"
    EXTREMUM = "extremum"
    SADDLE = "saddle"

    @classmethod
    def parse(cls, value) -> "CriticalKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for kind in cls:
            if key in (kind.value, kind.value[0], kind.name.lower()):
                return kind
        raise DomainError(f"unknown critical kind {value!r}")


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; infinite endpoints are IEEE infinities."""

    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise DomainError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse 'a,b' or '[a,b]'; empty, 'inf' or '-inf' entries mean unbounded."""
        parts = [p.strip() for p in str(text).strip().strip("[]").split(",")]
        if len(parts) != 2:
            raise DomainError(f"interval must look like 'a,b', got {text!r}")
        try:
            lo = float(parts[0]) if parts[0] else -math.inf
            hi = float(parts[1]) if parts[1] else math.inf
        except ValueError:
            raise DomainError(f"interval endpoints must be numbers, got {text!r}") from None
        return cls(lo, hi)

    @property
    def is_real_line(self) -> bool:
        return self.lo == -math.inf and self.hi == math.inf

    def contains(self, t):
        t = np.asarray(t)
        return (t >= self.lo) & (t <= self.hi)

    def __str__(self):
        return f"[{self.lo},{self.hi}]"


REAL_LINE = Interval()


def _phi(t):
    return np.exp(-0.5 * np.asarray(t, dtype=float) ** 2) / SQRT2PI


# ---------------------------------------------------------------------------
# densities


def pi1(kind, t):
    """Limiting density of critical values of the given kind (integrates to 1)."""
    kind = CriticalKind.parse(kind)
    t = np.asarray(t, dtype=float)
    g = np.exp(-0.5 * t * t)
    if kind is CriticalKind.CRITICAL:
        return SQRT3 / SQRT8PI * (2 * np.exp(-t * t) + t * t - 1) * g
    if kind is CriticalKind.EXTREMUM:
        return SQRT3 / SQRT2PI * (np.exp(-t * t) + t * t - 1) * g
    return SQRT3 / SQRT2PI * np.exp(-1.5 * t * t)


def _p1(kind, t):
    t = np.asarray(t, dtype=float)
    g = np.exp(-0.5 * t * t)
    if kind is CriticalKind.CRITICAL:
        return TWO_OVER_ROOTPI * (2 * np.exp(-t * t) + t * t - 1) * g
    if kind is CriticalKind.EXTREMUM:
        return TWO_OVER_ROOTPI * (np.exp(-t * t) + t * t - 1) * g
    return TWO_OVER_ROOTPI * np.exp(-1.5 * t * t)


def _p2(kind, t):
    t = np.asarray(t, dtype=float)
    t2 = t * t
    sad = TWO_OVER_ROOTPI * (4 + 3 * t2) * np.exp(-1.5 * t2)
    if kind is CriticalKind.SADDLE:
        return sad
    poly = TWO_OVER_ROOTPI * (-4 + t2 + t2 * t2) * np.exp(-0.5 * t2)
    if kind is CriticalKind.EXTREMUM:
        return poly + sad
    return poly + 2 * sad


def p3_explicit(kind, t):
    """Third density written out in closed form (no use of the first two)."""
    kind = CriticalKind.parse(kind)
    t = np.asarray(t, dtype=float)
    t2 = t * t
    e3 = np.exp(-1.5 * t2)
    if kind is CriticalKind.SADDLE:
        return (1 - 3 * t2) * e3 / SQRT8PI
    quartic = (1 - 4 * t2 + t2 * t2) * np.exp(-0.5 * t2)
    if kind is CriticalKind.EXTREMUM:
        return ((1 - 3 * t2) * e3 - quartic) / SQRT8PI
    return ((2 - 6 * t2) * e3 - quartic) / SQRT8PI


def p_density(order: int, kind, t):
    """Densities p_1, p_2 and p_3 = (5 p_1 - p_2)/4 of the given kind."""
    kind = CriticalKind.parse(kind)
    if order == 1:
        return _p1(kind, t)
    if order == 2:
        return _p2(kind, t)
    if order == 3:
        return 0.25 * (5 * _p1(kind, t) - _p2(kind, t))
    raise DomainError(f"order must be 1, 2 or 3, got {order}")


def p_density_integral(order: int, kind, t: float, lam_ratio: float = 1.0) -> float:
    """p_1 or p_2 from its definition as a 2-D Gaussian integral.

    The integrand is |2 sqrt(2) t z1 - z1^2 - z2^2| against a Gaussian kernel
    (times (3t - sqrt(2) z1)^2 for order 2). The kind restricts the sign of the
    Hessian determinant: positive for extrema, negative for saddles.
    ``lam_ratio`` is lambda/(lambda - 2); 1 gives the limiting density.
    Integrated numerically in polar coordinates centred at (sqrt(2) t, 0).
    """
    kind = CriticalKind.parse(kind)
    if order not in (1, 2):
        raise DomainError("integral representation exists for orders 1 and 2")
    s = float(lam_ratio)
    tq = float(t)
    kink = math.sqrt(2.0) * abs(tq)
    # (3 lam - 2) / (lam - 2) = 2 s + 1
    pref = (2 * math.pi) ** -1.5 * s * math.exp(-0.5 * (2 * s + 1) * tq * tq)

    def inner(r, th):
        z1 = math.sqrt(2.0) * tq + r * math.cos(th)
        z2 = r * math.sin(th)
        det = z1 * math.sqrt(8.0) * tq - z1 * z1 - z2 * z2
        if kind is CriticalKind.EXTREMUM and det <= 0:
            return 0.0
        if kind is CriticalKind.SADDLE and det >= 0:
            return 0.0
        val = abs(det) * math.exp(-0.5 * s * (z1 * z1 + z2 * z2 - math.sqrt(8.0) * tq * z1)) * r
        if order == 2:
            val *= (3 * tq - math.sqrt(2.0) * z1) ** 2
        return val

    def over_r(th):
        rmax = kink + 12.0 / math.sqrt(s)
        pts = [kink] if kink > 0 else None
        v, _ = integrate.quad(inner, 0.0, rmax, args=(th,), points=pts, epsabs=1e-13, epsrel=1e-12, limit=200)
        return v

    val, _ = integrate.quad(over_r, 0.0, 2 * math.pi, epsabs=1e-12, epsrel=1e-11, limit=200)
    return pref * val


# ---------------------------------------------------------------------------
# antiderivatives


def _h(y):
    """e^y (y - 1) + 1, accurate near y = 0."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 0.5
    ys = y[small]
    acc = np.zeros_like(ys)
    term = ys.copy()  # y^k / k! at k = 1
    for k in range(2, 30):
        term = term * ys / k
        acc = acc + (k - 1) * term
    out[small] = acc
    yl = y[~small]
    out[~small] = np.exp(yl) * (yl - 1) + 1
    return out


def p3_antiderivative(kind, t):
    """Closed-form antiderivative of p_3 vanishing at t = 0 and at +-infinity."""
    kind = CriticalKind.parse(kind)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    fin = np.isfinite(t)
    tf = t[fin]
    t2 = tf * tf
    e3 = np.exp(-1.5 * t2)
    if kind is CriticalKind.SADDLE:
        val = tf * e3
    else:
        extra = 1.0 if kind is CriticalKind.CRITICAL else 0.0
        near = np.abs(tf) < 0.7
        val = np.empty_like(tf)
        # t e^{-3t^2/2} (c + (t^2-1) e^{t^2}) with c = 1 + extra
        val[near] = tf[near] * e3[near] * (extra + _h(t2[near]))
        far = ~near
        val[far] = tf[far] * ((1 + extra) * e3[far] + (t2[far] - 1) * np.exp(-0.5 * t2[far]))
    out[fin] = val / SQRT8PI
    return out


def _G_pi1(kind, t):
    t = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore"):
        tphi = np.where(np.isfinite(t), t * _phi(np.where(np.isfinite(t), t, 0.0)), 0.0)
    base = ndtr(SQRT3 * t)
    if kind is CriticalKind.CRITICAL:
        return base - 0.5 * SQRT3 * tphi
    if kind is CriticalKind.EXTREMUM:
        return base - SQRT3 * tphi
    return base


def _G_p2_saddle(t):
    t = np.asarray(t, dtype=float)
    u = SQRT3 * t
    uphi = np.where(np.isfinite(u), np.where(np.isfinite(u), u, 0.0) * _phi(np.where(np.isfinite(u), u, 0.0)), 0.0)
    return 2.0 / SQRT3 * (5 * ndtr(u) - uphi)


def _G_p(order, kind, t):
    t = np.asarray(t, dtype=float)
    if order == 1:
        scale = 4.0 / SQRT3 if kind is CriticalKind.CRITICAL else 2.0 / SQRT3
        return scale * _G_pi1(kind, t)
    gs = _G_p2_saddle(t)
    if kind is CriticalKind.SADDLE:
        return gs
    tf = np.where(np.isfinite(t), t, 0.0)
    poly = np.where(np.isfinite(t), -2.0 * (tf ** 3 + 4 * tf) * _phi(tf), 0.0)
    return poly + (gs if kind is CriticalKind.EXTREMUM else 2 * gs)


def _check_interval(interval) -> Interval:
    if isinstance(interval, Interval):
        return interval
    if isinstance(interval, str):
        return Interval.parse(interval)
    lo, hi = interval
    return Interval(float(lo), float(hi))


def quad_line(f, interval, epsabs: float = 1e-12, epsrel: float = 1e-12) -> float:
    """Adaptive Gauss-Kronrod integral of f over an interval (possibly infinite)."""
    iv = _check_interval(interval)
    if iv.lo == iv.hi:
        return 0.0
    # split at 0 so that infinite ranges are mapped separately on each side
    pieces = []
    if iv.lo < 0 < iv.hi:
        pieces = [(iv.lo, 0.0), (0.0, iv.hi)]
    else:
        pieces = [(iv.lo, iv.hi)]
    total = 0.0
    for a, b in pieces:
        v, err = integrate.quad(lambda x: float(f(x)), a, b, epsabs=epsabs, epsrel=epsrel, limit=500)
        total += v
    return total


def pi1_integral(kind, interval) -> float:
    """Probability mass of pi1 on the interval (closed form)."""
    kind = CriticalKind.parse(kind)
    iv = _check_interval(interval)
    if iv.lo == iv.hi:
        return 0.0
    return float(_G_pi1(kind, iv.hi) - _G_pi1(kind, iv.lo))


def p_integral(order: int, kind, interval) -> float:
    """Integral of p_order over the interval (closed-form antiderivatives)."""
    kind = CriticalKind.parse(kind)
    iv = _check_interval(interval)
    if iv.lo == iv.hi:
        return 0.0
    if order in (1, 2):
        return float(_G_p(order, kind, iv.hi) - _G_p(order, kind, iv.lo))
    if order == 3:
        g = p3_antiderivative(kind, [iv.lo, iv.hi])
        return float(g[1] - g[0])
    raise DomainError(f"order must be 1, 2 or 3, got {order}")


def nu(kind, interval, method: str = "closed") -> float:
    """Leading variance constant: squared integral of p_3 over the interval."""
    kind = CriticalKind.parse(kind)
    iv = _check_interval(interval)
    if iv.lo == iv.hi:
        return 0.0
    if method == "closed":
        m = p_integral(3, kind, iv)
    elif method == "quad":
        m = quad_line(lambda x: p3_explicit(kind, x), iv)
    else:
        raise DomainError(f"unknown method {method!r}")
    return m * m


def berry_ratio(eps: float) -> float:
    """nu of extrema on [-eps, eps] divided by eps^10."""
    return nu(CriticalKind.EXTREMUM, Interval(-eps, eps)) / eps ** 10


def expected_count(ell: int, kind, interval=REAL_LINE) -> float:
    """Leading-order expected number of critical points of the kind with value in I."""
    if ell < 2:
        raise DomainError("expected_count needs ell >= 2")
    kind = CriticalKind.parse(kind)
    mass = pi1_integral(kind, interval)
    if kind is CriticalKind.CRITICAL:
        return 2.0 / SQRT3 * ell * ell * mass
    return ell * ell / SQRT3 * mass


def limiting_cdf(z):
    """Distribution function of the normalized critical values as ell grows."""
    z = np.asarray(z, dtype=float)
    out = _G_pi1(CriticalKind.CRITICAL, z)
    return np.clip(out, 0.0, 1.0) if out.ndim else float(min(max(out, 0.0), 1.0))


class DegenerateThresholdError(NumericError, ZeroDivisionError):
    """The variance constant vanishes at the requested threshold."""


def z_statistic(observed: float, ell: int, kind, u: float) -> float:
    """Standardized excursion count above u using the leading-order moments."""
    kind = CriticalKind.parse(kind)
    v = nu(kind, Interval(u, math.inf))
    if not v > 0.0:
        raise DegenerateThresholdError(f"degenerate threshold: nu({kind.value}, [{u}, inf)) = 0")
    expected = expected_count(ell, kind, Interval(u, math.inf))
    return (observed - expected) / math.sqrt(ell ** 3 * v)
