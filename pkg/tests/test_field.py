import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphcrit.densities import CriticalKind, Interval, REAL_LINE, limiting_cdf, pi1
from sphcrit.errors import DomainError
from sphcrit.experiments import simulate
from sphcrit.field import (FieldSample, NonMorseWarning, PointKind, StepCDF, count_in_interval, empirical_cdf,
                           evaluate_jet, field_values, find_critical_points, real_harmonics, sample_field, seed_grid)
from sphcrit.kacrice import k1_interval
from sphcrit.legendre import lambda_ell, legendre_jet


def random_points(n, seed=0):
    p = np.random.default_rng(seed).normal(size=(n, 3))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def tangent_frame(p):
    """Orthonormal (e_theta, e_phi) at p with the polar axis along z."""
    th = math.atan2(math.hypot(p[0], p[1]), p[2])
    ph = math.atan2(p[1], p[0])
    e1 = np.array([math.cos(th) * math.cos(ph), math.cos(th) * math.sin(ph), -math.sin(th)])
    e2 = np.array([-math.sin(ph), math.cos(ph), 0.0])
    return e1, e2


# sampling


def test_sample_determinism_and_size():
    a = sample_field(7, 99, 3)
    b = sample_field(7, 99, 3)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, sample_field(7, 99, 4).coeffs)
    assert sample_field(1, 0).coeffs.size == 3


def test_sample_moments():
    pooled = np.concatenate([sample_field(49, 5, i).coeffs for i in range(1000)])
    assert pooled.size >= 1e5 - 1e3
    assert abs(pooled.mean()) < 0.02
    assert abs(pooled.var() - 1) < 0.02


def test_sample_domain():
    with pytest.raises(DomainError):
        sample_field(0, 1)


@pytest.mark.parametrize("ell", [1, 4, 25])
def test_addition_theorem_normalization(ell):
    x = random_points(5, 1)
    y = random_points(5, 2)
    lhs = np.einsum("im,im->i", real_harmonics(ell, x), real_harmonics(ell, y))
    rhs = (2 * ell + 1) * legendre_jet(ell, np.clip(np.einsum("ij,ij->i", x, y), -1, 1)).values[0]
    assert np.allclose(lhs, rhs, atol=1e-10 * (2 * ell + 1))


def test_pointwise_variance_and_covariance():
    ell = 6
    x = np.array([0.0, 0.0, 1.0])
    y = np.array([math.sin(0.4), 0.0, math.cos(0.4)])
    n = 2000
    vals = np.array([field_values(sample_field(ell, 11, i), np.stack([x, y])) for i in range(n)])
    assert np.mean(vals[:, 0] ** 2) == pytest.approx(1.0, abs=3 * math.sqrt(2 / n))
    target = legendre_jet(ell, math.cos(0.4)).values[0]
    assert np.mean(vals[:, 0] * vals[:, 1]) == pytest.approx(target, abs=3 / math.sqrt(n))


# jets


@pytest.mark.parametrize("ell", [1, 3, 20, 80])
def test_trace_identity(ell):
    s = sample_field(ell, 3, 0)
    pts = random_points(100, ell)
    j = evaluate_jet(s, pts)
    lam = lambda_ell(ell)
    tr = j.hess[:, 0] + j.hess[:, 2]
    scale = np.abs(j.hess).sum(axis=1) + lam * np.abs(j.value) + 1e-300
    assert np.max(np.abs(tr + lam * j.value) / scale) < 1e-6


@pytest.mark.parametrize("ell", [2, 15, 60])
def test_value_matches_direct_summation(ell):
    s = sample_field(ell, 4, 1)
    pts = np.concatenate([random_points(200, 9), [[0, 0, 1], [0, 0, -1], [1, 0, 0]]])
    assert np.allclose(evaluate_jet(s, pts).value, field_values(s, pts), atol=1e-10 * math.sqrt(ell))


@pytest.mark.parametrize("ell", [5, 30])
def test_gradient_and_hessian_finite_differences(ell):
    # the jet frame depends on the chart, so compare frame-invariant quantities; the second
    # derivative along a geodesic equals the covariant Hessian in that direction
    s = sample_field(ell, 8, 2)
    h = 1e-5
    for p in np.concatenate([random_points(20, 4), [[0.01, 0.0, 0.99995]]]):
        p = p / np.linalg.norm(p)
        j = evaluate_jet(s, p)
        e1, e2 = tangent_frame(p)

        def along(e, t):
            return field_values(s, (math.cos(t) * p + math.sin(t) * e)[None])[0]

        def d1(e):
            return (along(e, h) - along(e, -h)) / (2 * h)

        def d2(e, step=2e-4):
            return (along(e, step) - 2 * along(e, 0.0) + along(e, -step)) / step ** 2

        g = np.array([d1(e1), d1(e2)])
        assert np.linalg.norm(g) == pytest.approx(np.linalg.norm(j.grad), abs=1e-5 * ell)
        diag = (e1 + e2) / math.sqrt(2)
        h11, h22 = d2(e1), d2(e2)
        h12 = d2(diag) - (h11 + h22) / 2
        fd_h = np.array([[h11, h12], [h12, h22]])
        jh = np.array([[j.hess[0], j.hess[1]], [j.hess[1], j.hess[2]]])
        scale = ell ** 2
        assert np.allclose(np.linalg.eigvalsh(fd_h), np.linalg.eigvalsh(jh), atol=1e-5 * scale)


def test_jet_rejects_non_unit():
    with pytest.raises(DomainError):
        evaluate_jet(sample_field(3, 0), np.array([1.0, 1.0, 0.0]))


# critical points


@pytest.mark.parametrize("index", range(5))
def test_ell1_two_points(index):
    cps = find_critical_points(sample_field(1, 21, index))
    assert len(cps) == 2
    assert cps.n_max == 1 and cps.n_min == 1 and cps.n_saddle == 0
    a = sample_field(1, 21, index).coeffs
    # f = a . (y, z, x) sqrt(3) / sqrt(3); the maximum value is |a|
    assert max(cps.values) == pytest.approx(np.linalg.norm(a), rel=1e-10)


@pytest.mark.parametrize("index", range(5))
def test_ell2_eigen_oracle(index):
    s = sample_field(2, 22, index)
    pts = random_points(40, index)
    f = field_values(s, pts)
    x, y, z = pts.T
    design = np.stack([x * x, y * y, z * z, 2 * x * y, 2 * x * z, 2 * y * z], axis=1)
    c = np.linalg.lstsq(design, f, rcond=None)[0]
    Q = np.array([[c[0], c[3], c[4]], [c[3], c[1], c[5]], [c[4], c[5], c[2]]])
    ev, vec = np.linalg.eigh(Q - np.trace(Q) / 3 * np.eye(3))
    cps = find_critical_points(s)
    assert len(cps) == 6
    assert (cps.n_max, cps.n_min, cps.n_saddle) == (2, 2, 2)
    for kind, k in ((PointKind.MIN, 0), (PointKind.SADDLE, 1), (PointKind.MAX, 2)):
        sel = cps.kinds == kind
        assert np.allclose(cps.values[sel], ev[k], atol=1e-10)
        for p in cps.positions[sel]:
            assert abs(abs(p @ vec[:, k]) - 1) < 1e-8


@pytest.mark.parametrize("ell", [1, 2, 5, 10, 20])
def test_morse_and_sign_rules(ell):
    for r in simulate(ell, 20, 31):
        assert not r.flagged
        assert r.n_max + r.n_min - r.n_saddle == 2
        assert np.all(r.values[r.kinds == PointKind.MAX] > 0)
        assert np.all(r.values[r.kinds == PointKind.MIN] < 0)


def test_critical_point_properties():
    s = sample_field(25, 2, 0)
    cps = find_critical_points(s)
    j = evaluate_jet(s, cps.positions)
    assert np.max(np.linalg.norm(j.grad, axis=1)) < 1e-10 * 25 ** 2
    det = j.hess[:, 0] * j.hess[:, 2] - j.hess[:, 1] ** 2
    assert np.all((det < 0) == (cps.kinds == PointKind.SADDLE))
    assert np.all((j.hess[:, 0] < 0)[cps.kinds == PointKind.MAX])
    assert np.all((j.hess[:, 0] > 0)[cps.kinds == PointKind.MIN])
    assert np.allclose(np.linalg.norm(cps.positions, axis=1), 1)
    # trace identity at 1000 random points of the same realization
    jr = evaluate_jet(s, random_points(1000, 3))
    lam = lambda_ell(25)
    assert np.max(np.abs(jr.hess[:, 0] + jr.hess[:, 2] + lam * jr.value)) < 1e-6 * lam


def test_point_iteration_and_item():
    cps = find_critical_points(sample_field(3, 1, 0))
    pts = list(cps)
    assert len(pts) == len(cps)
    assert pts[0].kind == cps[0].kind
    assert (pts[0].hess_det < 0) == (pts[0].kind == PointKind.SADDLE)


def test_oversample_stability():
    agree = total = 0
    for ell in (10, 30, 50):
        for i in range(10):
            s = sample_field(ell, 77, i)
            agree += len(find_critical_points(s, 4)) == len(find_critical_points(s, 6))
            total += 1
    assert agree >= 0.99 * total


def test_degenerate_flag():
    s = sample_field(10, 5, 0)
    with pytest.warns(NonMorseWarning):
        cps = find_critical_points(s, degenerate_tol=1e30)
    assert cps.flagged and "degenerate" in cps.flag_reason


def test_oversample_domain():
    with pytest.raises(DomainError):
        find_critical_points(sample_field(3, 0), 2)


def test_seed_grid_spacing():
    pts, h = seed_grid(20, 4)
    assert h == pytest.approx(math.pi / 80)
    # every random point is within one cell diameter of a seed
    q = random_points(2000, 5)
    d = np.arccos(np.clip(q @ pts.T, -1, 1)).min(axis=1)
    assert d.max() < h


# counting and empirical distributions


@pytest.fixture(scope="module")
def cps30():
    return find_critical_points(sample_field(30, 1234, 0))


def test_count_full_and_empty(cps30):
    assert count_in_interval(cps30, "c", REAL_LINE) == len(cps30)
    assert count_in_interval(cps30, "c", Interval(0.3, 0.3)) == 0
    assert count_in_interval(list(cps30), "s", REAL_LINE) == cps30.n_saddle


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4), st.floats(0, 6))
def test_count_partition(lo, width):
    cps = _cached30()
    iv = Interval(lo, lo + width)
    assert count_in_interval(cps, "e", iv) + count_in_interval(cps, "s", iv) == count_in_interval(cps, "c", iv)


_C30 = {}


def _cached30():
    if not _C30:
        _C30["v"] = find_critical_points(sample_field(30, 1234, 0))
    return _C30["v"]


def test_empirical_cdf_properties(cps30):
    fstar = empirical_cdf(cps30)
    assert fstar(cps30.values.max() + 1) == 1.0
    assert fstar(cps30.values.min() - 1) == 0.0
    expected = k1_interval(30, REAL_LINE, "c", method="closed")
    f = empirical_cdf(cps30, "deterministic", expected_total=expected)
    assert f(np.inf) == pytest.approx(len(cps30) / expected)
    assert fstar.sup_distance(f) <= abs(1 - len(cps30) / expected) + 1e-12
    with pytest.raises(DomainError):
        empirical_cdf(cps30, "deterministic")


def test_step_cdf_right_continuous():
    s = StepCDF([0.0, 1.0, 1.0, 2.0], 4)
    assert s(1.0) == 0.75
    assert s(np.nextafter(1.0, 0)) == 0.25
    assert s.sup_distance(StepCDF([0.0, 1.0, 1.0, 2.0], 4)) == 0.0


def test_sup_distance_ell50_single_realization():
    cps = find_critical_points(sample_field(50, 12345, 0))
    assert empirical_cdf(cps).sup_distance(limiting_cdf) < 0.05


@pytest.mark.slow
def test_value_histogram_ell100():
    values = np.concatenate([r.values for r in simulate(100, 500, 12345)])
    edges = np.linspace(-4, 4, 41)
    hist = np.histogram(values, edges)[0] / values.size
    # cell probabilities of the limiting density
    from sphcrit.densities import pi1_integral

    ref = np.array([pi1_integral(CriticalKind.CRITICAL, Interval(a, b)) for a, b in zip(edges[:-1], edges[1:])])
    tv = 0.5 * np.abs(hist - ref).sum() + 0.5 * (1 - ref.sum())
    assert tv < 0.02
