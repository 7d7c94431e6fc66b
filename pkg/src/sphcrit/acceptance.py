"""The fifteen acceptance criteria as callable checks.

Each check returns a :class:`CriterionResult`; :func:`run_suite` runs the
fast (deterministic, closed-form and quadrature) subset or all of them,
including the Monte Carlo ones.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import covariance, densities, kacrice, legendre
from .densities import CriticalKind, Interval, REAL_LINE
from .experiments import (DEFAULT_SEED, SCHEMA_VERSION, ExperimentConfig, run_cdf_experiment, run_mean_experiment,
                          run_variance_experiment, simulate, sup_distances)
from .legendre import DEFAULT_C

KINDS = (CriticalKind.CRITICAL, CriticalKind.EXTREMUM, CriticalKind.SADDLE)
FAST = (1, 2, 3, 4, 8, 10, 11, 12, 13, 15)
MONTE_CARLO = (5, 6, 7, 9, 14)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name} ({self.runtime:.1f} s)"


def _timed(number, name):
    def deco(fn):
        def run(seed=DEFAULT_SEED):
            t0 = time.perf_counter()
            passed, details = fn(seed)
            return CriterionResult(number, name, bool(passed), details, time.perf_counter() - t0)
        run.number = number
        run.label = name
        return run
    return deco


@_timed(1, "density normalization")
def c01_normalization(seed):
    d = {}
    for k in KINDS:
        d[f"closed_{k.value}"] = densities.pi1_integral(k, REAL_LINE)
        d[f"quad_{k.value}"] = densities.quad_line(lambda t, k=k: float(densities.pi1(k, t)), REAL_LINE)
    return all(abs(v - 1.0) <= 1e-10 for v in d.values()), d


@_timed(2, "closed-form p1, p2 vs Gaussian integrals")
def c02_representation(seed):
    worst = 0.0
    for k in KINDS:
        for order in (1, 2):
            for t in (-2.0, -1.0, 0.0, 1.0, 2.0):
                diff = abs(float(densities.p_density(order, k, t)) - densities.p_density_integral(order, k, t))
                worst = max(worst, diff)
    return worst <= 1e-6, {"max_abs_diff": worst}


@_timed(3, "p3 identities")
def c03_p3(seed):
    t = np.random.default_rng(seed).uniform(-4, 4, 100)
    w1 = max(float(np.max(np.abs(densities.p3_explicit(k, t)
                                 - (5 * densities.p_density(1, k, t) - densities.p_density(2, k, t)) / 4)))
             for k in KINDS)
    w2 = float(np.max(np.abs(densities.p3_explicit("c", t) - densities.p3_explicit("e", t)
                             - densities.p3_explicit("s", t))))
    return max(w1, w2) <= 1e-12, {"five_p1_minus_p2": w1, "kind_split": w2}


@_timed(4, "Berry cancellation")
def c04_berry(seed):
    r = densities.berry_ratio(0.01)
    target = 1 / (8 * math.pi)
    return abs(r - target) <= 1e-3, {"ratio": r, "target": target}


@_timed(5, "Morse identity on every realization")
def c05_morse(seed, ells=(1, 2, 5, 10, 20, 50), n=50):
    d = {}
    ok = True
    for ell in ells:
        res = simulate(ell, n, seed)
        bad = [r.index for r in res if (r.flagged and r.flag_reason == "morse")
               or (not r.flagged and r.n_max + r.n_min - r.n_saddle != 2)]
        d[f"ell{ell}"] = {"realizations": n, "failures": bad,
                          "excluded_degenerate": sum(r.flag_reason == "degenerate" for r in res)}
        ok &= not bad
    return ok, d


@_timed(6, "expected counts at ell=30")
def c06_means(seed):
    targets = {CriticalKind.CRITICAL: 2 / math.sqrt(3) * 900, CriticalKind.EXTREMUM: 900 / math.sqrt(3),
               CriticalKind.SADDLE: 900 / math.sqrt(3)}
    d = {}
    ok = True
    for k, target in targets.items():
        rep = run_mean_experiment(ExperimentConfig(ell=30, realizations=200, seed=seed, kind=k))
        m = rep.extra["mean"]
        passed = abs(m - target) <= 0.03 * target
        d[k.value] = {"mean": m, "se": rep.extra["standard_error"], "target": target,
                      "relative": m / target - 1, "finite_degree": rep.records[1].predicted, "passed": passed}
        ok &= passed
    return ok, d


@_timed(7, "restricted counts at ell=30 on [1,inf)")
def c07_restricted(seed):
    iv = Interval(1.0, math.inf)
    d = {}
    ok = True
    for k in (CriticalKind.EXTREMUM, CriticalKind.SADDLE):
        rep = run_mean_experiment(ExperimentConfig(ell=30, realizations=200, seed=seed, kind=k, interval=iv),
                                  tolerance=0.05)
        rec = rep.records[0]
        d[k.value] = {"mean": rec.observed, "target": rec.predicted, "relative": rec.observed / rec.predicted - 1,
                      "passed": rec.passed}
        ok &= rec.passed
    return ok, d


@_timed(8, "Kac-Rice integral vs expected_count")
def c08_kacrice(seed):
    d = {}
    ok = True
    for ell in (30, 200):
        for iv in (REAL_LINE, Interval(1.0, math.inf)):
            kr = kacrice.k1_interval(ell, iv, CriticalKind.CRITICAL, method="integral")
            ec = densities.expected_count(ell, CriticalKind.CRITICAL, iv)
            passed = abs(kr - ec) <= 0.005 * ec
            d[f"ell{ell}{iv}"] = {"kac_rice": kr, "expected_count": ec, "ratio": kr / ec, "passed": passed}
            ok &= passed
    return ok, d


@_timed(9, "variance at ell=30, saddles on [0.5,inf)")
def c09_variance(seed):
    cfg = ExperimentConfig(ell=30, realizations=800, seed=seed, kind=CriticalKind.SADDLE,
                           interval=Interval(0.5, math.inf))
    rep = run_variance_experiment(cfg)
    d = {r.name: {"observed": r.observed, "predicted": r.predicted, "relative": r.observed / r.predicted - 1,
                  "tolerance": r.tolerance, "passed": r.passed} for r in rep.records}
    d["variance_se"] = rep.extra["variance_standard_error"]
    d["quality"] = rep.quality
    return rep.passed, d


@_timed(10, "q at a=0 equals p1 p1 / 8")
def c10_qzero(seed):
    worst = 0.0
    grid = (-2.0, -1.0, 0.0, 1.0, 2.0)
    for t1 in grid:
        for t2 in grid:
            q = kacrice.q_eval(kacrice.QArgument(np.zeros(8), t1, t2))
            worst = max(worst, abs(q - kacrice.q_zero(t1, t2)))
    return worst <= 2e-4, {"max_abs_diff": worst}


@_timed(11, "A-term constants at ell=100")
def c11_aterms(seed):
    A = kacrice.a_term_integrals(100)
    small = {k: A[k] for k in ("A1", "A2", "A4", "A5", "A6", "A8")}
    ok = abs(A["A3"] + 0.08) <= 0.015 and abs(A["A77"] - 0.32) <= 0.05 and all(abs(v) <= 0.02
                                                                                 for v in small.values())
    return ok, {"A3": A["A3"], "A77": A["A77"], **small}


@_timed(12, "short-range determinant")
def c12_det(seed):
    import mpmath

    psi = np.geomspace(1e-3, 1e-2, 9)
    logdet = [float(mpmath.log(covariance.short_range_det(10, p))) for p in psi]
    slope = float(np.polyfit(np.log(psi), logdet, 1)[0])
    grid = np.linspace(0.5 / 200, 0.5, 200)
    positive = all(covariance.short_range_det(10, p) > 0 for p in grid)
    return abs(slope - 26) <= 0.5 and positive, {"slope": slope, "positive_on_grid": positive}


@_timed(13, "Hilb asymptotics")
def c13_hilb(seed):
    ell = 100
    phi = np.linspace(DEFAULT_C / ell, math.pi / 2, 64)
    ratio = legendre.hilb_ratio(ell, phi).max(axis=1)
    within = bool(np.all(ratio <= legendre.HILB_KAPPA))

    def resid(L):
        return abs(float(legendre.legendre_jet(L, math.cos(1.0)).values[0])
                   - float(legendre.hilb_jet(L, 1.0).asymptotic_values[0]))

    r50, r200 = resid(50), resid(200)
    return within and r50 >= 2 * r200, {"max_ratio": ratio.tolist(), "kappa": legendre.HILB_KAPPA.tolist(),
                                        "residual_50": r50, "residual_200": r200}


@_timed(14, "empirical CDF convergence")
def c14_cdf(seed):
    med = {}
    for ell in (25, 50, 100):
        res = simulate(ell, 50, seed)
        med[ell] = float(np.median([sup_distances(r, ell)[0] for r in res]))
    ok = med[50] < 0.05 and med[25] > med[50] > med[100]
    return ok, {f"median_ell{k}": v for k, v in med.items()}


@_timed(15, "Schur complement vs explicit Delta")
def c15_schur(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        ell = int(rng.integers(10, 400))
        phi = float(rng.uniform(DEFAULT_C / ell, math.pi / 2))
        cc = covariance.conditional_cov(ell, phi)
        tp = covariance.two_point_cov(ell, phi)
        lam = float(legendre.lambda_ell(ell))
        ex = covariance.delta_from_a(covariance.explicit_a_vec(lam, tp.alpha, tp.beta, tp.gamma))
        worst = max(worst, float(np.max(np.abs(ex - cc.delta)) / np.max(np.abs(cc.delta))))
    return worst <= 1e-9, {"max_relative": worst}


CRITERIA = {f.number: f for f in (c01_normalization, c02_representation, c03_p3, c04_berry, c05_morse, c06_means,
                                  c07_restricted, c08_kacrice, c09_variance, c10_qzero, c11_aterms, c12_det,
                                  c13_hilb, c14_cdf, c15_schur)}


def run_suite(suite: str = "fast", seed: int = DEFAULT_SEED, progress=None) -> dict:
    """Run a suite and return a JSON-ready report; ``progress`` receives each result."""
    if suite not in ("fast", "all"):
        raise ValueError("suite must be 'fast' or 'all'")
    numbers = FAST if suite == "fast" else sorted(CRITERIA)
    results = []
    for n in numbers:
        r = CRITERIA[n](seed)
        results.append(r)
        if progress is not None:
            progress(r)
    return {"schema_version": SCHEMA_VERSION, "suite": suite, "seed": seed,
            "passed": all(r.passed for r in results), "criteria": [asdict(r) for r in results]}
