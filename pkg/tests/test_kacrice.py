import math

import numpy as np
import pytest

from sphcrit.covariance import conditional_cov
from sphcrit.densities import REAL_LINE, CriticalKind, Interval, expected_count, nu, p_density, p_integral
from sphcrit.errors import DomainError
from sphcrit.kacrice import (QArgument, a0_residual, a_term_integrals, approx_variance, dq_da, dq_da3_direct,
                             k1_density, k1_interval, k2_kernel, l2_kernel, phi_quad, q_eval, q_zero)
from sphcrit.legendre import DEFAULT_C, lambda_ell

GRID = (-2.0, -1.0, 0.0, 1.0, 2.0)


# one-point


@pytest.mark.parametrize("ell", [2, 5, 30])
def test_k1_closed_matches_integral(ell):
    for kind in CriticalKind:
        a = k1_interval(ell, REAL_LINE, kind, method="integral")
        b = k1_interval(ell, REAL_LINE, kind, method="closed")
        assert a == pytest.approx(b, rel=1e-9)


def test_k1_kind_partition():
    for iv in (REAL_LINE, Interval(1.0, math.inf), Interval(-0.3, 0.8)):
        c = k1_interval(30, iv, "c")
        assert k1_interval(30, iv, "e") + k1_interval(30, iv, "s") == pytest.approx(c, rel=1e-8)


def test_k1_exact_small_degrees():
    # ell = 1 has no saddles; ell = 2 always has 6 critical points (2 max, 2 min, 2 saddles)
    assert k1_interval(2, REAL_LINE, "c") == pytest.approx(6.0, rel=1e-10)
    assert k1_interval(2, REAL_LINE, "s") == pytest.approx(2.0, rel=1e-10)


def test_k1_finite_degree_closed_form():
    for ell in (3, 30, 200):
        lam = lambda_ell(ell)
        exact = 2 + 2 * (lam - 2) ** 1.5 / math.sqrt(3 * lam - 2)
        assert k1_interval(ell, REAL_LINE, "c", method="closed") == pytest.approx(exact, rel=1e-10)


def test_k1_example_ell30():
    # stated target: |result - 1039.23| < 6
    assert abs(k1_interval(30, REAL_LINE, "c") - 1039.23) < 6


def test_k1_large_ell_ratio():
    for iv in (REAL_LINE, Interval(1.0, math.inf)):
        r = k1_interval(200, iv, "c", method="closed") / expected_count(200, "c", iv)
        assert r == pytest.approx(1.0, abs=0.002)


def test_k1_density_nonnegative():
    t = np.linspace(-6, 6, 301)
    for kind in CriticalKind:
        assert np.all(k1_density(30, kind, t) >= 0)


# q function


def test_q_zero_grid():
    for t1 in GRID:
        for t2 in GRID:
            q = q_eval(QArgument(np.zeros(8), t1, t2))
            ref = p_density(1, "c", t1) * p_density(1, "c", t2) / 8
            assert q == pytest.approx(ref, rel=2e-4)
            assert q == pytest.approx(q_zero(t1, t2), rel=1e-12)


def test_q_symmetry():
    a = conditional_cov(40, 0.3).a_vec
    for t1, t2 in ((0.3, -1.2), (1.5, 0.2)):
        assert q_eval(QArgument(a, t1, t2)) == pytest.approx(q_eval(QArgument(a, t2, t1)), rel=1e-6)


def test_q_methods_agree():
    arg = QArgument(conditional_cov(20, 0.5).a_vec, 0.4, -0.9)
    ref = q_eval(arg, polar_nodes=(24, 64))
    assert q_eval(arg) == pytest.approx(ref, rel=1e-10)
    assert q_eval(arg, "mc") == pytest.approx(ref, rel=5e-3)
    assert q_eval(arg, "gh", nodes=24) == pytest.approx(ref, rel=0.03)


def test_q_rejects_non_pd():
    a = np.zeros(8)
    a[4] = 5.0
    with pytest.raises(DomainError):
        QArgument(a, 0.0, 0.0)
    with pytest.raises(DomainError):
        QArgument(np.zeros(7), 0.0, 0.0)


def test_q_kinds_partition():
    arg = QArgument(conditional_cov(25, 0.7).a_vec, 0.5, 1.0)
    total = q_eval(arg)
    parts = sum(q_eval(arg, kinds=(k1, k2)) for k1 in ("e", "s") for k2 in ("e", "s"))
    assert parts == pytest.approx(total, rel=1e-9)


def test_dq_da3_matches_direct():
    assert dq_da(3, 0.0, 0.0) == pytest.approx(dq_da3_direct(0.0, 0.0), abs=1e-3)
    assert dq_da(3, 0.7, -0.4) == pytest.approx(dq_da3_direct(0.7, -0.4), rel=1e-3)


def test_dq_da3_closed_form():
    for t1, t2 in ((0.0, 0.0), (1.0, -0.5)):
        p1 = [p_density(1, "c", t) for t in (t1, t2)]
        p2 = [p_density(2, "c", t) for t in (t1, t2)]
        v2 = (-6 * p1[0] * p1[1] + p2[0] * p1[1] + p1[0] * p2[1]) / 128
        assert dq_da3_direct(t1, t2) == pytest.approx(v2, rel=1e-6)


def test_second_a7_derivative_is_v3():
    t1, t2 = 0.3, -0.8
    g = [(3 * p_density(1, "c", t) - p_density(2, "c", t)) / 8 for t in (t1, t2)]
    d2 = dq_da(7, t1, t2, h=2e-2, order=2)
    assert d2 == pytest.approx(g[0] * g[1] / 8, rel=1e-4)


def test_taylor_remainder_is_quadratic():
    t1, t2 = 0.2, 0.9
    q0 = q_eval(QArgument(np.zeros(8), t1, t2))
    d = dq_da3_direct(t1, t2)
    hs = np.array([0.04, 0.02, 0.01, 0.005])
    rem = []
    for h in hs:
        a = np.zeros(8)
        a[2] = h
        rem.append(abs(q_eval(QArgument(a, t1, t2)) - q0 - h * d))
    slope = np.polyfit(np.log(hs), np.log(rem), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


# two-point kernels


def test_k2_nonnegative_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        ell = int(rng.integers(5, 80))
        phi = float(rng.uniform(DEFAULT_C / ell, math.pi / 2))
        t1, t2 = rng.normal(size=2) * 1.5
        assert k2_kernel(ell, phi, t1, t2).k2 >= 0


def test_k2_symmetry():
    a = k2_kernel(30, 0.4, 0.5, -1.0)
    b = k2_kernel(30, 0.4, -1.0, 0.5)
    assert a.k2 == pytest.approx(b.k2, rel=1e-6)


def test_k2_domain():
    with pytest.raises(DomainError):
        k2_kernel(50, DEFAULT_C / 50 * 0.9, 0.0, 0.0)


def test_k2_decoupled_limit_odd_degree():
    ell = 201
    for t1 in GRID:
        for t2 in GRID:
            k2 = k2_kernel(ell, math.pi / 2, t1, t2).k2
            ref = ell ** 4 / 4 * p_density(1, "c", t1) * p_density(1, "c", t2) / (16 * math.pi ** 2)
            assert k2 == pytest.approx(ref, rel=0.05)


def test_k2_decoupled_limit_even_degree_example():
    # stated example at ell = 200, phi = pi/2, relative deviation < 5%
    ell = 200
    worst = 0.0
    for t1 in GRID:
        for t2 in GRID:
            k2 = k2_kernel(ell, math.pi / 2, t1, t2).k2
            ref = ell ** 4 / 4 * p_density(1, "c", t1) * p_density(1, "c", t2) / (16 * math.pi ** 2)
            worst = max(worst, abs(k2 / ref - 1))
    assert worst < 0.05


def test_v3_diagonal_nonnegative():
    # v3(t, t) = g(t)^2 / 8 with g = (3 p1 - p2) / 8; isolate it with a weight vector picking the third term
    for t in np.linspace(-3, 3, 13):
        g = (3 * p_density(1, "c", t) - p_density(2, "c", t)) / 8
        assert g * g / 8 >= 0


def test_l2_v2_integral_finite():
    P1 = p_integral(1, "c", REAL_LINE)
    P2 = p_integral(2, "c", REAL_LINE)
    v2 = (-3 * P1 * P1 + P1 * P2) / 64
    assert math.isfinite(v2)


def _l2_grid(ell, phi, t):
    # vectorized L2 on a t-grid from the same closed forms
    from sphcrit.legendre import legendre_jet

    _, _, d2, d3, d4 = legendre_jet(ell, math.cos(phi)).values
    s = math.sin(phi)
    w = (0.5 * s ** 4 * d2 ** 2, 32 / ell ** 2 * s ** 6 * d3 ** 2, 64 / ell ** 4 * s ** 8 * d4 ** 2)
    p1, p2 = p_density(1, "c", t), p_density(2, "c", t)
    g = (3 * p1 - p2) / 8
    v1 = np.outer(p1, p1)
    v2 = (-3 * np.outer(p1, p1) + 0.5 * np.outer(p2, p1) + 0.5 * np.outer(p1, p2)) / 64
    v3 = np.outer(g, g) / 8
    return w[0] * v1 - w[1] * v2 + w[2] * v3


def test_l2_grid_matches_kernel():
    t = np.array([-1.5, 0.0, 0.7])
    grid = _l2_grid(60, 0.9, t)
    for i, a in enumerate(t):
        for j, b in enumerate(t):
            assert grid[i, j] == pytest.approx(l2_kernel(60, 0.9, a, b), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("ell", [50, 100])
def test_l2_integrated_bound(ell):
    t = np.linspace(-6, 6, 241)
    dt = t[1] - t[0]
    phis = np.linspace(DEFAULT_C / ell, math.pi / 2, 64)
    worst = max(np.abs(_l2_grid(ell, p, t)).sum() * dt * dt for p in phis)
    assert worst / ell ** 4 < 1.0


def test_l2_close_to_k2_in_decoupled_regime():
    ell = 201
    for t1, t2 in ((0.0, 0.0), (1.0, -1.0)):
        s = k2_kernel(ell, 1.2, t1, t2)
        lam = lambda_ell(ell)
        lead = 2 * lam ** 2 * q_zero(t1, t2) / (16 * math.pi ** 2)
        assert s.k2 - lead == pytest.approx(0.0, abs=0.1 * lead)


# phi integrals


def test_phi_quad_polynomial():
    vals, _ = phi_quad(lambda x: np.stack([np.sin(x), x ** 3]), 0.0, math.pi / 2)
    assert vals[0] == pytest.approx(1.0, rel=1e-12)
    assert vals[1] == pytest.approx((math.pi / 2) ** 4 / 4, rel=1e-12)


def test_a_terms_ell100():
    A = a_term_integrals(100)
    assert A["A3"] == pytest.approx(-0.08, abs=0.015)
    assert A["A77"] == pytest.approx(0.32, abs=0.05)
    for i in (1, 2, 4, 5, 6, 8):
        assert abs(A[f"A{i}"]) <= 0.02


def test_a0_close_to_one():
    assert a_term_integrals(100)["A0"] == pytest.approx(1.0, abs=0.02)


def test_a0_residual_growth_exponent():
    r = {ell: abs(a0_residual(ell)["corrected"]) for ell in (50, 100, 200)}
    e1 = math.log(r[100] / r[50]) / math.log(2)
    e2 = math.log(r[200] / r[100]) / math.log(2)
    assert max(e1, e2) <= 2.3


def test_a0_raw_residual_recorded():
    # the uncorrected difference grows like ell^3 because A0 = 1 + O(1/ell)
    r = {ell: abs(a0_residual(ell)["raw"]) for ell in (50, 200)}
    assert math.log(r[200] / r[50]) / math.log(4) > 2.5


def test_approx_variance_saddle_half_line():
    iv = Interval(1.0, math.inf)
    ratio = approx_variance(200, "s", iv) / 200 ** 3
    assert ratio == pytest.approx(nu("s", iv), rel=0.10)


def test_approx_variance_cauchy():
    iv = Interval(1.0, math.inf)
    v = [approx_variance(ell, "s", iv) / ell ** 3 for ell in (100, 150, 200)]
    assert abs(v[2] - v[1]) < abs(v[1] - v[0])


def test_approx_variance_real_line_depressed():
    r = [abs(approx_variance(ell, "c", REAL_LINE)) / ell ** 3 for ell in (30, 100, 200)]
    assert r[0] > r[1] > r[2]
    assert r[2] < approx_variance(200, "s", Interval(0.5, math.inf)) / 200 ** 3


def test_approx_variance_domain():
    with pytest.raises(DomainError):
        approx_variance(5, "s", REAL_LINE)
