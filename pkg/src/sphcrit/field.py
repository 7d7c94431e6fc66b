"""Sampling random spherical harmonics, evaluating jets and locating all
critical points.

Normalization: f(x) = (2 ell + 1)^(-1/2) sum_m a_m Y_m(x) with real harmonics
Y_0 = Pbar_0, Y_m = sqrt(2) Pbar_m cos(m phi), Y_-m = sqrt(2) Pbar_m sin(m phi),
so that E f(x) f(y) = P_ell(cos d(x, y)).

Jets are computed in one of two spherical charts: the standard one, and one
whose polar axis is the x-axis. Every point is evaluated in the chart where it
sits at least 45 degrees from the chart poles, so the sin(theta) factors in the
chart formulas stay bounded away from zero.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .densities import CriticalKind, Interval, limiting_cdf
from .errors import DomainError
from .legendre import assoc_legendre_all, lambda_ell, sectoral_scale

CHUNK = 8192
# rotation taking the standard chart to the x-polar chart: p = R u
_R = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
_SWITCH = 1.0 / math.sqrt(2.0)
# merge radius for converged Newton iterates, in units of the grid spacing
DEDUP_FACTOR = 1e-4
# iterates closer than this (in grid spacings) are following the same Newton path
MERGE_FACTOR = 1e-3


class NonMorseWarning(UserWarning):
    """A realization has a nearly degenerate critical point."""


@dataclass(frozen=True)
class FieldSample:
    ell: int
    coeffs: np.ndarray  # a_m for m = -ell..ell, stored at index ell + m
    seed: int
    index: int = 0


def sample_field(ell: int, master_seed: int, index: int = 0) -> FieldSample:
    """Draw the 2 ell + 1 standard Gaussian coefficients of one realization.

    The generator is seeded by SeedSequence(master_seed, spawn_key=(index,)),
    so each index gets an independent, reproducible stream.
    """
    if int(ell) != ell or ell < 1:
        raise DomainError("sample_field needs an integer ell >= 1")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    rng = np.random.default_rng(ss)
    return FieldSample(int(ell), rng.standard_normal(2 * int(ell) + 1), int(master_seed), int(index))


# ---------------------------------------------------------------------------
# real harmonic basis


def real_harmonics(ell: int, points) -> np.ndarray:
    """Matrix of Y_m(p) for m = -ell..ell, shape (n, 2 ell + 1)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    theta = np.arctan2(np.hypot(p[:, 0], p[:, 1]), p[:, 2])
    phi = np.arctan2(p[:, 1], p[:, 0])
    pbar = assoc_legendre_all(ell, np.cos(theta))  # (ell+1, n)
    out = np.empty((p.shape[0], 2 * ell + 1))
    out[:, ell] = pbar[0]
    m = np.arange(1, ell + 1)
    ang = np.outer(phi, m)
    out[:, ell + 1:] = math.sqrt(2.0) * pbar[1:].T * np.cos(ang)
    out[:, ell - 1::-1] = math.sqrt(2.0) * pbar[1:].T * np.sin(ang)
    return out


@lru_cache(maxsize=16)
def rotation_matrix(ell: int) -> np.ndarray:
    """Orthogonal D with (D a) the coefficients of u -> f(R u) in the same basis.

    Computed by exact Gauss-Legendre x trapezoid quadrature of Y(u) Y(R u).
    """
    x, w = np.polynomial.legendre.leggauss(ell + 1)
    nphi = 2 * ell + 2
    phi = 2 * np.pi * np.arange(nphi) / nphi
    st = np.sqrt(1 - x * x)
    u = np.stack([np.outer(st, np.cos(phi)).ravel(), np.outer(st, np.sin(phi)).ravel(),
                  np.repeat(x, nphi)], axis=1)
    wt = np.repeat(w, nphi) * (2 * np.pi / nphi) / (4 * np.pi)
    Yu = real_harmonics(ell, u)
    YRu = real_harmonics(ell, u @ _R.T)
    return (Yu * wt[:, None]).T @ YRu


def chart_coefficients(sample: FieldSample):
    """Coefficient vectors of the field in the standard and x-polar charts."""
    a = sample.coeffs
    if sample.ell == 0:
        return a, a
    return a, rotation_matrix(sample.ell) @ a


def _trig_coeffs(ell, a):
    """Cosine and sine amplitudes A_m, B_m for m = 0..ell (normalization included)."""
    norm = 1.0 / math.sqrt(2 * ell + 1)
    A = np.empty((ell + 1,) + a.shape[1:])
    B = np.zeros((ell + 1,) + a.shape[1:])
    A[0] = a[ell] * norm
    A[1:] = math.sqrt(2.0) * a[ell + 1:] * norm
    B[1:] = math.sqrt(2.0) * a[ell - 1::-1] * norm
    return A, B


@lru_cache(maxsize=64)
def _mrec(ell: int):
    """Coefficients sqrt((ell+m)(ell-m+1)) for m = 0..ell+1."""
    m = np.arange(ell + 2, dtype=float)
    return np.sqrt(np.clip((ell + m) * (ell - m + 1), 0.0, None))


def chart_jet(ell: int, a, theta, phi, *, which=None):
    """Value and coordinate derivatives (t, p, tt, tp, pp) of the field in a chart.

    ``a`` is a coefficient vector, or a (2 ell + 1, k) array of k vectors in
    which case ``which`` selects one column per point. Associated Legendre
    functions at fixed degree come from a downward recurrence in the order m
    started at the sectoral value; this costs O(ell) per point and is stable
    away from the chart poles.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    A, B = _trig_coeffs(ell, np.asarray(a, dtype=float))
    Cc = A - 1j * B
    Cc = Cc[:, None] if Cc.ndim == 1 else Cc[:, which]
    lam = float(lambda_ell(ell))
    s = np.sin(theta)
    cot = np.cos(theta) / s
    n = theta.size
    if ell == 0:
        z = np.zeros(n)
        return Cc[0].real * np.ones(n), z, z, z, z, z
    r = _mrec(ell)
    P = np.empty((ell + 2, n))
    P[ell + 1] = 0.0
    P[ell] = sectoral_scale(ell) * np.exp(ell * np.log(s))
    for m in range(ell, 0, -1):
        # Pbar^{m-1} = (2 m cot Pbar^m - r_{m+1} Pbar^{m+1}) / r_m
        P[m - 1] = (2 * m * cot * P[m] - r[m + 1] * P[m + 1]) / r[m]
    m = np.arange(ell + 1, dtype=float)[:, None]
    Pm = P[:ell + 1]
    dP = np.empty_like(Pm)
    dP[1:] = 0.5 * (r[1:ell + 1, None] * P[:ell] - r[2:ell + 2, None] * P[2:ell + 2])
    dP[0] = -r[1] * P[1]
    # (A_m - i B_m) exp(i m phi) has real part A cos + B sin and imaginary
    # part -(d/dphi of that) / m
    z = np.empty((ell + 1, n), dtype=complex)
    z[0] = 1.0
    z[1:] = np.exp(1j * phi)
    W = Cc * np.cumprod(z, axis=0)
    Wr, Wi = W.real, W.imag
    mP = m * Pm
    es = "ij,ij->j"
    v = np.einsum(es, Pm, Wr)
    gt = np.einsum(es, dP, Wr)
    gp = -np.einsum(es, mP, Wi)
    gtp = -np.einsum(es, m * dP, Wi)
    m2 = np.einsum(es, m * mP, Wr)
    gtt = -cot * gt - lam * v + m2 / (s * s)
    return v, gt, gp, gtt, gtp, -m2


def _to_chart(points, chart):
    u = points if chart == 0 else points @ _R  # u = R^T p
    theta = np.arctan2(np.hypot(u[:, 0], u[:, 1]), u[:, 2])
    phi = np.arctan2(u[:, 1], u[:, 0])
    return theta, phi


def _from_chart(theta, phi, chart):
    st = np.sin(theta)
    u = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)
    return u if chart == 0 else u @ _R.T


def _chart_of(points):
    return (np.abs(points[:, 2]) > _SWITCH).astype(int)


def _raw_jets(sample, charts, points, which):
    """Chart-coordinate jets for points (n, 3) assigned to chart ids ``which``."""
    n = points.shape[0]
    out = np.empty((6, n))
    theta, phi = _pos_phi(points, which)
    coef = np.stack(charts, axis=1)  # (2 ell + 1, 2)
    step = max(256, CHUNK * 32 // (sample.ell + 2))
    for lo in range(0, n, step):
        sl = slice(lo, lo + step)
        out[:, sl] = chart_jet(sample.ell, coef, theta[sl], phi[sl], which=which[sl])
    return out, theta


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian (h11, h12, h22) in a local orthonormal frame."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray


def _covariant(raw, theta):
    v, gt, gp, gtt, gtp, gpp = raw
    s = np.sin(theta)
    cot = np.cos(theta) / s
    grad = np.stack([gt, gp / s])
    hess = np.stack([gtt, (gtp - cot * gp) / s, gpp / (s * s) + cot * gt])
    return v, grad, hess


def evaluate_jet(sample: FieldSample, position) -> Jet2:
    """Jet of the field at unit vectors ``position`` (shape (3,) or (n, 3))."""
    p = np.asarray(position, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    if np.any(np.abs(np.linalg.norm(p, axis=1) - 1.0) > 1e-12):
        raise DomainError("positions must be unit vectors")
    charts = chart_coefficients(sample)
    raw, theta = _raw_jets(sample, charts, p, _chart_of(p))
    v, grad, hess = _covariant(raw, theta)
    if single:
        return Jet2(v[0], grad[:, 0], hess[:, 0])
    return Jet2(v, grad.T, hess.T)


def field_values(sample: FieldSample, points) -> np.ndarray:
    """f at unit vectors, by direct summation over the harmonic basis."""
    return real_harmonics(sample.ell, points) @ sample.coeffs / math.sqrt(2 * sample.ell + 1)


# ---------------------------------------------------------------------------
# critical points


class PointKind(enum.IntEnum):
    MIN = 0
    SADDLE = 1
    MAX = 2


@dataclass(frozen=True)
class CriticalPoint:
    position: np.ndarray
    value: float
    kind: PointKind
    hess_det: float


@dataclass
class CriticalPointSet:
    """All critical points of one realization, stored as parallel arrays."""

    ell: int
    positions: np.ndarray
    values: np.ndarray
    kinds: np.ndarray
    hess_det: np.ndarray
    residual: np.ndarray
    flagged: bool = False
    flag_reason: str = ""
    oversample: int = 0
    info: dict = dc_field(default_factory=dict)

    def __len__(self):
        return int(self.values.size)

    def __getitem__(self, i):
        return CriticalPoint(self.positions[i], float(self.values[i]), PointKind(int(self.kinds[i])),
                             float(self.hess_det[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def n_max(self):
        return int(np.sum(self.kinds == PointKind.MAX))

    @property
    def n_min(self):
        return int(np.sum(self.kinds == PointKind.MIN))

    @property
    def n_saddle(self):
        return int(np.sum(self.kinds == PointKind.SADDLE))

    @property
    def euler_characteristic(self):
        return self.n_max + self.n_min - self.n_saddle


@lru_cache(maxsize=16)
def seed_grid(ell: int, oversample: int):
    """Cell centres of a latitude-band grid with cell diameter about pi/(oversample ell).

    Bands are uniform in colatitude; each band gets a number of cells
    proportional to its circumference, so cells have nearly equal area.
    Returns (points, spacing).
    """
    nb = int(math.ceil(oversample * max(ell, 1)))
    h = math.pi / nb
    pts = []
    for j in range(nb):
        th = (j + 0.5) * h
        nphi = max(3, int(math.ceil(2 * math.pi * math.sin(th) / h)))
        ph = (np.arange(nphi) + 0.5 * (j % 2)) * 2 * math.pi / nphi
        st = math.sin(th)
        pts.append(np.stack([st * np.cos(ph), st * np.sin(ph), np.full(nphi, math.cos(th))], axis=1))
    return np.concatenate(pts), h


def _newton_step(raw, theta, max_step):
    """Damped Newton update in chart coordinates; returns (dtheta, dphi, step length)."""
    _, gt, gp, gtt, gtp, gpp = raw
    det = gtt * gpp - gtp * gtp
    with np.errstate(divide="ignore", invalid="ignore"):
        dth = -(gpp * gt - gtp * gp) / det
        dph = -(-gtp * gt + gtt * gp) / det
    s = np.sin(theta)
    length = np.hypot(dth, s * dph)
    bad = ~np.isfinite(length)
    length[bad] = np.inf
    with np.errstate(divide="ignore"):
        scale = np.where(length > max_step, max_step / np.where(bad, 1.0, length), 1.0)
    scale[bad] = 0.0
    return dth * scale, dph * scale, length


def find_critical_points(sample: FieldSample, oversample: int = 4, *, max_iter: int = 30,
                         newton_tol: float | None = None, degenerate_tol: float | None = None,
                         refine: int = 2, dedup_factor: float = DEDUP_FACTOR) -> CriticalPointSet:
    """Locate and classify all critical points of a realization.

    Newton iterations start from the centre of every grid cell whose first
    Newton step stays within 1.5 cells; iterates that wander further than
    2.5 cells from their seed are abandoned (the point belongs to another
    cell). Converged points closer than ``dedup_factor`` cell diameters are
    treated as one, keeping the smaller gradient residual. The default is far
    below the grid scale because distinct saddle/extremum pairs at distances
    around 0.1 cell occur in a few percent of realizations. If the
    Morse count max + min - saddle differs from 2 the search is repeated
    with a finer grid, up to ``refine`` times.
    """
    if oversample < 3:
        raise DomainError("oversample must be >= 3")
    ell = sample.ell
    lam = float(lambda_ell(ell))
    tol = 1e-10 * ell * ell if newton_tol is None else newton_tol
    dtol = 1e-8 * lam * lam / 8 if degenerate_tol is None else degenerate_tol
    charts = chart_coefficients(sample)
    os_ = oversample
    attempts = []
    for _ in range(refine + 1):
        res = _search(sample, charts, os_, max_iter, tol, dtol, dedup_factor)
        attempts.append((os_, len(res), res.euler_characteristic))
        if res.euler_characteristic == 2:
            break
        os_ *= 2
    res.info["attempts"] = attempts
    if res.euler_characteristic != 2:
        res.flagged = True
        res.flag_reason = (res.flag_reason + ";" if res.flag_reason else "") + "morse"
    return res


def _newton(sample, charts, seeds, h, max_iter, tol, prefilter):
    """Damped Newton on the gradient with backtracking on its norm.

    Returns converged positions, their residuals and the number of seeds
    that neither converged nor were discarded.
    """
    which = _chart_of(seeds)
    raw, theta = _raw_jets(sample, charts, seeds, which)
    dth, dph, first = _newton_step(raw, theta, h)
    keep = first <= prefilter * h
    start = seeds[keep]
    pos = start.copy()
    which, theta, raw = which[keep], theta[keep], raw[:, keep]
    dth, dph = dth[keep], dph[keep]
    _, phi = _pos_phi(pos, which)
    _, grad, _ = _covariant(raw, theta)
    resid = np.hypot(grad[0], grad[1])
    n = len(pos)
    done = resid < tol
    alive = np.ones(n, dtype=bool)
    t = np.ones(n)
    steps = np.zeros(n, dtype=int)
    for _ in range(4 * max_iter):
        act = np.nonzero(alive & ~done)[0]
        if act.size == 0:
            break
        trial = np.empty((act.size, 3))
        for ch in (0, 1):
            sel = which[act] == ch
            if np.any(sel):
                k = act[sel]
                trial[sel] = _from_chart(theta[k] + t[k] * dth[k], phi[k] + t[k] * dph[k], ch)
        w_new = _chart_of(trial)
        raw_new, th_new = _raw_jets(sample, charts, trial, w_new)
        _, g_new, _ = _covariant(raw_new, th_new)
        r_new = np.hypot(g_new[0], g_new[1])
        accept = (r_new <= (1 - 1e-4 * t[act]) * resid[act]) | (r_new < tol)
        acc = act[accept]
        rej = act[~accept]
        t[rej] *= 0.5
        alive[rej[t[rej] < 2.0 ** -12]] = False
        if acc.size:
            pos[acc] = trial[accept]
            which[acc] = w_new[accept]
            theta[acc] = th_new[accept]
            _, phi[acc] = _pos_phi(trial[accept], w_new[accept])
            resid[acc] = r_new[accept]
            t[acc] = 1.0
            steps[acc] += 1
            done[acc] = r_new[accept] < tol
            dth[acc], dph[acc], _ = _newton_step(raw_new[:, accept], th_new[accept], h)
            drift = np.linalg.norm(pos[acc] - start[acc], axis=1)
            alive[acc[(drift > 2.5 * h) & ~done[acc]]] = False
            alive[acc[(steps[acc] >= max_iter) & ~done[acc]]] = False
        # iterates that collapse onto each other follow the same path
        cur = np.nonzero(alive & ~done)[0]
        if cur.size > 1:
            pairs = cKDTree(pos[cur]).query_pairs(MERGE_FACTOR * h, output_type="ndarray")
            if len(pairs):
                alive[cur[pairs[:, 1]]] = False
    ok = done & alive
    return pos[ok], resid[ok], int(np.sum(alive & ~done))


def _dedup(pts, r, radius):
    """Merge points closer than radius, keeping the smaller residual."""
    if len(pts) < 2:
        return pts, r
    order = np.argsort(r, kind="stable")
    pts, r = pts[order], r[order]
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    drop = np.zeros(len(pts), dtype=bool)
    if len(pairs):
        for i, j in sorted(map(tuple, np.sort(pairs, axis=1))):
            if not drop[i]:
                drop[j] = True
    return pts[~drop], r[~drop]


def _frame3(points, which):
    """Orthonormal tangent frame (e_theta, e_phi) of the chart, as 3-vectors."""
    th, ph = _pos_phi(points, which)
    e1 = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=1)
    e2 = np.stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)], axis=1)
    rot = which == 1
    e1[rot] = e1[rot] @ _R.T
    e2[rot] = e2[rot] @ _R.T
    return e1, e2


def _grad3(sample, charts, points):
    which = _chart_of(points)
    raw, theta = _raw_jets(sample, charts, points, which)
    _, grad, hess = _covariant(raw, theta)
    e1, e2 = _frame3(points, which)
    return grad[0][:, None] * e1 + grad[1][:, None] * e2, hess, e1, e2


def _geodesic(x, v, t):
    return np.cos(t)[:, None] * x + np.sin(t)[:, None] * v


def _partner_seeds(sample, charts, pts, h):
    """Predicted locations of nearby critical points missed by the grid.

    Along each Hessian eigendirection v the directional derivative is fitted
    by mu t + c t^2 / 2; its second root -2 mu / c is where a partner of
    opposite index would sit if the pair is close to merging.
    """
    if len(pts) == 0:
        return np.empty((0, 3))
    _, hess, e1, e2 = _grad3(sample, charts, pts)
    H = np.stack([np.stack([hess[0], hess[1]], -1), np.stack([hess[1], hess[2]], -1)], -2)
    mu, vec = np.linalg.eigh(H)
    eps = 0.1 * h
    out = []
    for k in range(2):
        v = vec[:, 0, k][:, None] * e1 + vec[:, 1, k][:, None] * e2
        e = np.full(len(pts), eps)
        gp, *_ = _grad3(sample, charts, _geodesic(pts, v, e))
        gm, *_ = _grad3(sample, charts, _geodesic(pts, v, -e))
        # tangent of the geodesic at +-eps
        tp = -np.sin(eps) * pts + np.cos(eps) * v
        tm = np.sin(eps) * pts + np.cos(eps) * v
        c = (np.sum(gp * tp, 1) + np.sum(gm * tm, 1)) / eps ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = -2 * mu[:, k] / c
        ok = np.isfinite(tstar) & (np.abs(tstar) < 3 * h) & (np.abs(tstar) > 1e-3 * h)
        if np.any(ok):
            out.append(_geodesic(pts[ok], v[ok], tstar[ok]))
    return np.concatenate(out) if out else np.empty((0, 3))


def _search(sample, charts, oversample, max_iter, tol, dtol, dedup_factor, partner_rounds=3):
    ell = sample.ell
    seeds, h = seed_grid(ell, oversample)
    radius = dedup_factor * h
    pts, r, stuck = _newton(sample, charts, seeds, h, max_iter, tol, prefilter=1.5)
    pts, r = _dedup(pts, r, radius)
    fresh = pts
    rounds = 0
    for rounds in range(1, partner_rounds + 1):
        cand = _partner_seeds(sample, charts, fresh, h)
        if len(cand) == 0:
            break
        new, rn, _ = _newton(sample, charts, cand, h, max_iter, tol, prefilter=np.inf)
        if len(new) == 0:
            break
        d, _ = cKDTree(pts).query(new) if len(pts) else (np.full(len(new), np.inf), None)
        keep = d > radius
        if not np.any(keep):
            break
        fresh, rn = _dedup(new[keep], rn[keep], radius)
        pts = np.concatenate([pts, fresh])
        r = np.concatenate([r, rn])
    pts = pts / np.linalg.norm(pts, axis=1)[:, None]
    raw, theta = _raw_jets(sample, charts, pts, _chart_of(pts))
    v, grad, hess = _covariant(raw, theta)
    det = hess[0] * hess[2] - hess[1] ** 2
    tr = hess[0] + hess[2]
    kinds = np.where(det < 0, PointKind.SADDLE, np.where(tr < 0, PointKind.MAX, PointKind.MIN)).astype(int)
    out = CriticalPointSet(ell, pts, v, kinds, det, np.hypot(grad[0], grad[1]), oversample=oversample)
    out.info["unconverged"] = stuck
    out.info["partner_rounds"] = rounds
    if np.any(np.abs(det) < dtol):
        out.flagged = True
        out.flag_reason = "degenerate"
        warnings.warn(f"near-degenerate critical point (ell={ell}, index={sample.index})", NonMorseWarning)
    return out


def _pos_phi(points, which):
    th = np.empty(len(points))
    ph = np.empty(len(points))
    for ch in (0, 1):
        sel = which == ch
        if np.any(sel):
            th[sel], ph[sel] = _to_chart(points[sel], ch)
    return th, ph


# ---------------------------------------------------------------------------
# counting and empirical distributions


def _kind_mask(kinds, kind: CriticalKind):
    if kind is CriticalKind.CRITICAL:
        return np.ones(kinds.shape, dtype=bool)
    if kind is CriticalKind.SADDLE:
        return kinds == PointKind.SADDLE
    return kinds != PointKind.SADDLE


def _as_arrays(points):
    if isinstance(points, CriticalPointSet):
        return points.values, points.kinds
    pts = list(points)
    return (np.array([p.value for p in pts], dtype=float),
            np.array([int(p.kind) for p in pts], dtype=int))


def count_in_interval(points, kind, interval) -> int:
    """Number of critical points of the kind whose value lies in the interval."""
    kind = CriticalKind.parse(kind)
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    values, kinds = _as_arrays(points)
    if values.size == 0:
        return 0
    return int(np.sum(_kind_mask(kinds, kind) & interval.contains(values)))


class StepCDF:
    """Right-continuous step function k(z)/norm, k(z) = #{values <= z}."""

    def __init__(self, values, norm: float):
        self.values = np.sort(np.asarray(values, dtype=float))
        self.norm = float(norm)

    def __call__(self, z):
        return np.searchsorted(self.values, np.asarray(z, dtype=float), side="right") / self.norm

    def sup_distance(self, other) -> float:
        """sup_z |self(z) - other(z)| for a continuous cdf or another StepCDF."""
        v = self.values
        if v.size == 0:
            return float(np.max(np.abs(other(np.array([1e300]))))) if callable(other) else 0.0
        if isinstance(other, StepCDF):
            grid = np.union1d(v, other.values)
            right = np.abs(self(grid) - other(grid))
            left = np.abs(self(np.nextafter(grid, -np.inf)) - other(np.nextafter(grid, -np.inf)))
            tail = abs(self(np.inf) - other(np.inf))
            return float(max(right.max(), left.max(), tail))
        F = np.asarray(other(v), dtype=float)
        k = np.arange(1, v.size + 1)
        right = np.abs(k / self.norm - F)
        left = np.abs((k - 1) / self.norm - F)
        tail = abs(v.size / self.norm - 1.0)
        return float(max(right.max(), left.max(), tail))


def empirical_cdf(points, mode: str = "random_normalization", expected_total: float | None = None) -> StepCDF:
    """Empirical distribution of critical values.

    ``deterministic`` divides by the expected total count, ``random_normalization``
    by the observed total.
    """
    values, _ = _as_arrays(points)
    if mode == "deterministic":
        if expected_total is None or not expected_total > 0:
            raise DomainError("deterministic normalization needs expected_total > 0")
        return StepCDF(values, expected_total)
    if mode == "random_normalization":
        return StepCDF(values, max(values.size, 1))
    raise DomainError(f"unknown mode {mode!r}")


def cdf_sup_distance(points) -> float:
    """sup_z |F*(z) - F_inf(z)| for one realization."""
    return empirical_cdf(points).sup_distance(limiting_cdf)
