import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from sphcrit.errors import DomainError
from sphcrit.legendre import (DEFAULT_C, HILB_KAPPA, assoc_legendre, assoc_legendre_all, calibrate_hilb_kappa,
                              hilb_jet, hilb_ratio, jet_recurrence, lambda_ell, legendre_jet)


def test_p2_value():
    assert legendre_jet(2, 0.5).values[0] == pytest.approx(-0.125, abs=1e-15)


def test_boundary_derivatives_ell10():
    v = legendre_jet(10, 1.0).values
    assert v[0] == pytest.approx(1.0, abs=1e-14)
    assert v[1] == pytest.approx(55.0, rel=1e-14)
    assert v[2] == pytest.approx(1485.0, rel=1e-14)


def test_second_derivative_by_finite_difference():
    h = 1e-6
    x = 1.0 - 2 * h
    d1p = legendre_jet(10, x + h).values[1]
    d1m = legendre_jet(10, x - h).values[1]
    fd = (d1p - d1m) / (2 * h)
    assert fd == pytest.approx(legendre_jet(10, x).values[2], rel=1e-6)
    assert legendre_jet(10, x).values[2] == pytest.approx(1485.0, rel=1e-3)


@pytest.mark.parametrize("ell", range(0, 51))
def test_boundary_values_exact_integer(ell):
    vals = jet_recurrence(ell, Fraction(1))
    lam = lambda_ell(ell)
    assert vals[0] == 1
    assert vals[1] == Fraction(lam, 2)
    assert vals[2] == Fraction(lam * (lam - 2), 8)


@pytest.mark.parametrize("ell", [1, 5, 20, 77, 200])
def test_ode_residual(ell):
    x = np.random.default_rng(ell).uniform(-1 + 1e-6, 1 - 1e-6, 100)
    p, d1, d2 = legendre_jet(ell, x).values[:3]
    lam = lambda_ell(ell)
    res = (1 - x * x) * d2 - 2 * x * d1 + lam * p
    scale = np.abs((1 - x * x) * d2) + np.abs(2 * x * d1) + np.abs(lam * p)
    assert np.max(np.abs(res) / scale) < 1e-9


@pytest.mark.parametrize("ell", [3, 40, 199])
def test_bonnet(ell):
    x = np.random.default_rng(0).uniform(-1, 1, 100)
    pm, p, pp = (legendre_jet(n, x).values[0] for n in (ell - 1, ell, ell + 1))
    res = (ell + 1) * pp - (2 * ell + 1) * x * p + ell * pm
    scale = np.abs((ell + 1) * pp) + np.abs((2 * ell + 1) * x * p) + np.abs(ell * pm)
    assert np.max(np.abs(res) / scale) < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 30), st.floats(-1, 1))
def test_matches_numpy_derivatives(ell, x):
    c = np.zeros(ell + 1)
    c[-1] = 1
    ref = [np.polynomial.legendre.legval(x, np.polynomial.legendre.legder(c, k)) for k in range(5)]
    got = legendre_jet(ell, x).values
    for k in range(5):
        assert got[k] == pytest.approx(ref[k], rel=1e-9, abs=1e-9 * (1 + ell) ** (2 * k))


def test_domain_errors():
    with pytest.raises(DomainError):
        legendre_jet(3, 1.5)
    with pytest.raises(DomainError):
        legendre_jet(-1, 0.2)
    with pytest.raises(DomainError):
        assoc_legendre(3, 4, 0.1)


def test_hilb_examples():
    exact = legendre_jet(100, math.cos(math.pi / 4)).values
    hj = hilb_jet(100, math.pi / 4)
    assert abs(hj.asymptotic_values[0] - exact[0]) <= HILB_KAPPA[0] * 100 ** -1.5
    e2 = legendre_jet(100, 0.0).values[2]
    a2 = hilb_jet(100, math.pi / 2).asymptotic_values[2]
    assert abs(a2 / e2 - 1) < 0.02


def test_hilb_domain_boundary():
    hilb_jet(50, DEFAULT_C / 50)
    with pytest.raises(DomainError):
        hilb_jet(50, DEFAULT_C / 50 - 1e-9)


@pytest.mark.parametrize("ell", [20, 50, 100, 200])
def test_hilb_within_calibrated_bound(ell):
    phi = np.linspace(DEFAULT_C / ell, math.pi / 2, 64)
    assert np.all(hilb_ratio(ell, phi).max(axis=1) <= HILB_KAPPA)


def test_hilb_calibration_is_reproducible():
    assert np.allclose(calibrate_hilb_kappa(), HILB_KAPPA, rtol=1e-10)


def test_hilb_error_decreases_in_ell():
    errs = [abs(hilb_jet(L, 1.0).asymptotic_values[0] / legendre_jet(L, math.cos(1.0)).values[0] - 1)
            for L in (50, 100, 200)]
    assert errs[0] >= errs[1] >= errs[2]


def _rodrigues(ell, m, x):
    # P_ell^m(x) = (1 - x^2)^{m/2} d^m/dx^m P_ell(x), no Condon-Shortley phase
    c = np.zeros(ell + 1)
    c[-1] = 1
    return (1 - x * x) ** (m / 2) * np.polynomial.legendre.legval(x, np.polynomial.legendre.legder(c, m))


def test_assoc_legendre_rodrigues():
    ell, m, x = 3, 2, 0.3
    norm = math.sqrt((2 * ell + 1) * math.factorial(ell - m) / math.factorial(ell + m))
    assert assoc_legendre(ell, m, x) == pytest.approx(norm * _rodrigues(ell, m, x), rel=1e-13)


@pytest.mark.parametrize("ell", [0, 1, 7, 60])
def test_addition_theorem_same_point(ell):
    x = np.array([1.0, 0.3, -0.8, 0.0])
    p = assoc_legendre_all(ell, x)
    total = p[0] ** 2 + 2 * np.sum(p[1:] ** 2, axis=0)
    assert np.allclose(total, 2 * ell + 1, rtol=1e-11)


def test_north_pole_only_m0():
    p = assoc_legendre_all(9, 1.0)
    assert p[0] == pytest.approx(math.sqrt(19))
    assert np.all(p[1:] == 0)


@pytest.mark.parametrize("ell", [4, 150])
def test_against_scipy(ell):
    x = np.linspace(-0.99, 0.99, 7)
    ms = np.arange(0, min(ell, 30) + 1)
    ours = assoc_legendre_all(ell, x)[ms]
    for m in ms:
        lf = 0.5 * (special.gammaln(ell - m + 1) - special.gammaln(ell + m + 1))
        ref = math.sqrt(2 * ell + 1) * np.exp(lf) * special.lpmv(m, ell, x) * (-1) ** m
        assert np.allclose(ours[m], ref, rtol=1e-9, atol=1e-12)


def test_high_degree_near_pole_is_finite():
    p = assoc_legendre_all(1000, math.cos(1e-3))
    assert np.all(np.isfinite(p))
    assert p[0] ** 2 + 2 * np.sum(p[1:] ** 2) == pytest.approx(2001, rel=1e-9)
