"""Monte Carlo experiments: configuration, parallel simulation and reports."""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import __version__
from .densities import CriticalKind, Interval, REAL_LINE, expected_count, limiting_cdf, nu
from .errors import DomainError
from .field import CriticalPointSet, NonMorseWarning, PointKind, empirical_cdf, find_critical_points, sample_field
from .kacrice import approx_variance, k1_interval
from .legendre import DEFAULT_C

SCHEMA_VERSION = "1.0"
DEFAULT_SEED = 12345
MIN_VARIANCE_REALIZATIONS = 100


@dataclass(frozen=True)
class ExperimentConfig:
    ell: int = 30
    realizations: int = 200
    seed: int = DEFAULT_SEED
    interval: Interval = REAL_LINE
    kind: CriticalKind = CriticalKind.CRITICAL
    oversample: int = 4
    regime_constant_C: float = DEFAULT_C
    q_method: str = "polar"
    nodes: int = 24
    phi_tol: float = 1e-4
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", CriticalKind.parse(self.kind))
        if not isinstance(self.interval, Interval):
            object.__setattr__(self, "interval", Interval.parse(self.interval))
        if int(self.ell) != self.ell or self.ell < 1:
            raise DomainError("ell must be an integer >= 1")
        if self.realizations < 1:
            raise DomainError("realizations must be >= 1")
        if self.oversample < 3:
            raise DomainError("oversample must be >= 3")
        if not (self.regime_constant_C > 0 and self.phi_tol > 0):
            raise DomainError("tolerances and C must be positive")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["interval"] = str(self.interval)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_mapping(cls, m: dict) -> "ExperimentConfig":
        """Build from string or typed values; unknown keys are rejected."""
        names = {f.name: f for f in fields(cls)}
        kw = {}
        for k, v in m.items():
            key = k.replace("-", "_")
            if key == "C":
                key = "regime_constant_C"
            if key not in names:
                raise DomainError(f"unknown config key {k!r}")
            if key == "interval":
                v = v if isinstance(v, Interval) else Interval.parse(str(v))
            elif key == "kind":
                v = CriticalKind.parse(v)
            elif key in ("ell", "realizations", "seed", "oversample", "nodes", "workers"):
                v = int(v)
            elif key in ("regime_constant_C", "phi_tol"):
                v = float(v)
            kw[key] = v
        return cls(**kw)


@dataclass
class MetricRecord:
    name: str
    observed: float
    predicted: float
    tolerance: float
    relative: bool
    source: str
    passed: bool = False
    note: str = ""

    def __post_init__(self):
        self.passed = within(self.observed, self.predicted, self.tolerance, self.relative)


def within(observed, predicted, tolerance, relative) -> bool:
    if not (np.isfinite(observed) and np.isfinite(predicted)):
        return False
    diff = abs(observed - predicted)
    return bool(diff <= tolerance * abs(predicted)) if relative else bool(diff <= tolerance)


@dataclass
class ExperimentReport:
    name: str
    config: dict
    records: list = field(default_factory=list)
    timing: float = 0.0
    quality: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "version": __version__, "name": self.name,
                "config": self.config, "passed": self.passed,
                "records": [asdict(r) for r in self.records], "timing_s": self.timing,
                "quality": self.quality, "extra": self.extra}


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class Realization:
    index: int
    values: np.ndarray
    kinds: np.ndarray
    flagged: bool
    flag_reason: str
    attempts: int

    @property
    def n_max(self):
        return int(np.sum(self.kinds == PointKind.MAX))

    @property
    def n_min(self):
        return int(np.sum(self.kinds == PointKind.MIN))

    @property
    def n_saddle(self):
        return int(np.sum(self.kinds == PointKind.SADDLE))

    def count(self, kind, interval: Interval) -> int:
        kind = CriticalKind.parse(kind)
        mask = interval.contains(self.values)
        if kind is CriticalKind.SADDLE:
            mask &= self.kinds == PointKind.SADDLE
        elif kind is CriticalKind.EXTREMUM:
            mask &= self.kinds != PointKind.SADDLE
        return int(mask.sum())


def _one(args):
    ell, seed, index, oversample = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonMorseWarning)
        cps = find_critical_points(sample_field(ell, seed, index), oversample)
    return Realization(index, cps.values, cps.kinds.astype(np.int8), cps.flagged, cps.flag_reason,
                       len(cps.info.get("attempts", [])))


_CACHE: dict = {}


def simulate(ell: int, realizations: int, seed: int = DEFAULT_SEED, oversample: int = 4, workers: int = 1,
             start: int = 0) -> list:
    """Critical points of realizations start..start+realizations-1, ordered by index.

    Results are memoized per process, so experiments sharing a seed reuse
    realizations. Output does not depend on the number of workers.
    """
    todo = [i for i in range(start, start + realizations) if (ell, seed, oversample, i) not in _CACHE]
    jobs = [(ell, seed, i, oversample) for i in todo]
    if jobs:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                out = list(ex.map(_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
        else:
            out = [_one(j) for j in jobs]
        for r in out:
            _CACHE[(ell, seed, oversample, r.index)] = r
    return [_CACHE[(ell, seed, oversample, i)] for i in range(start, start + realizations)]


def clear_cache():
    _CACHE.clear()


def quality_stats(results) -> dict:
    flagged = [r for r in results if r.flagged]
    return {"realizations": len(results), "flagged": len(flagged),
            "flag_reasons": sorted({r.flag_reason for r in flagged}),
            "refined": int(sum(r.attempts > 1 for r in results)),
            "morse_failures": int(sum(r.n_max + r.n_min - r.n_saddle != 2 for r in results))}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    m = math.fsum(x) / len(x)
    se = float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")
    return m, se


def _default_workers(cfg):
    return cfg.workers if cfg.workers else (os.cpu_count() or 1)


def run_mean_experiment(cfg: ExperimentConfig, tolerance: float = 0.03) -> ExperimentReport:
    """MC mean count vs the leading-order expectation and the finite-degree Kac-Rice value."""
    t0 = time.perf_counter()
    res = simulate(cfg.ell, cfg.realizations, cfg.seed, cfg.oversample, _default_workers(cfg))
    use = [r for r in res if not r.flagged]
    counts = [r.count(cfg.kind, cfg.interval) for r in use]
    m, se = _mean_se(counts)
    rep = ExperimentReport("mean", cfg.to_dict(), quality=quality_stats(res))
    rep.records.append(MetricRecord(f"mean N^{cfg.kind.value}{cfg.interval} vs leading term", m,
                                    expected_count(cfg.ell, cfg.kind, cfg.interval), tolerance, True,
                                    "densities.expected_count"))
    if cfg.ell >= 2:
        rep.records.append(MetricRecord(f"mean N^{cfg.kind.value}{cfg.interval} vs finite-degree Kac-Rice", m,
                                        k1_interval(cfg.ell, cfg.interval, cfg.kind, method="closed"),
                                        max(4 * se, 1e-12), False, "kacrice.k1_interval"))
    rep.extra = {"mean": m, "standard_error": se}
    rep.timing = time.perf_counter() - t0
    return rep


def run_variance_experiment(cfg: ExperimentConfig, tol_nu: float = 0.25, tol_approx: float = 0.15) -> ExperimentReport:
    """Sample variance of counts vs ell^3 nu and vs the approximate Kac-Rice variance."""
    if cfg.realizations < MIN_VARIANCE_REALIZATIONS:
        raise DomainError(f"variance experiment needs at least {MIN_VARIANCE_REALIZATIONS} realizations")
    t0 = time.perf_counter()
    res = simulate(cfg.ell, cfg.realizations, cfg.seed, cfg.oversample, _default_workers(cfg))
    use = [r for r in res if not r.flagged]
    x = np.array([r.count(cfg.kind, cfg.interval) for r in use], dtype=float)
    n = len(x)
    var = float(np.var(x, ddof=1))
    # standard error of the sample variance from the fourth central moment
    m4 = float(np.mean((x - x.mean()) ** 4))
    se_var = math.sqrt(max(m4 - var * var * (n - 3) / (n - 1), 0.0) / n)
    rep = ExperimentReport("variance", cfg.to_dict(), quality=quality_stats(res))
    pred_nu = cfg.ell ** 3 * nu(cfg.kind, cfg.interval)
    rep.records.append(MetricRecord(f"Var N^{cfg.kind.value}{cfg.interval} vs ell^3 nu", var, pred_nu, tol_nu, True,
                                    "densities.nu"))
    if cfg.ell >= 10:
        pred_av = approx_variance(cfg.ell, cfg.kind, cfg.interval, cfg.regime_constant_C, cfg.phi_tol)
        rep.records.append(MetricRecord(f"Var N^{cfg.kind.value}{cfg.interval} vs approx_variance", var, pred_av,
                                        tol_approx, True, "kacrice.approx_variance"))
    rep.extra = {"variance": var, "variance_standard_error": se_var, "mean": float(x.mean()), "n_used": n}
    rep.timing = time.perf_counter() - t0
    return rep


def sup_distances(r: Realization, ell: int) -> tuple:
    """(sup |F* - F_inf|, sup |F* - F|, |1 - N/E N|) for one realization."""
    pts = _as_points(r)
    fstar = empirical_cdf(pts, "random_normalization")
    total = len(r.values)
    expected = k1_interval(ell, REAL_LINE, CriticalKind.CRITICAL, method="closed") if ell >= 2 else 2.0
    f = empirical_cdf(pts, "deterministic", expected_total=expected)
    return fstar.sup_distance(limiting_cdf), fstar.sup_distance(f), abs(1 - total / expected)


def _as_points(r: Realization) -> CriticalPointSet:
    n = len(r.values)
    return CriticalPointSet(0, np.zeros((n, 3)), r.values, r.kinds.astype(int), np.ones(n), np.zeros(n))


def run_cdf_experiment(cfg: ExperimentConfig, threshold: float = 0.05) -> ExperimentReport:
    """Distribution over realizations of sup_z |F*(z) - F_inf(z)|."""
    t0 = time.perf_counter()
    res = simulate(cfg.ell, cfg.realizations, cfg.seed, cfg.oversample, _default_workers(cfg))
    d = np.array([sup_distances(r, cfg.ell) for r in res])
    q = np.quantile(d[:, 0], [0.1, 0.25, 0.5, 0.75, 0.9])
    rep = ExperimentReport("cdf", cfg.to_dict(), quality=quality_stats(res))
    rep.records.append(MetricRecord("median sup|F* - F_inf| below threshold", float(q[2]), 0.0, threshold, False,
                                    "densities.limiting_cdf"))
    rep.records.append(MetricRecord("sup|F* - F| <= |1 - N/EN| (worst slack)",
                                    float(np.max(d[:, 1] - d[:, 2])), 0.0, 1e-12, False, "field.empirical_cdf"))
    rep.records[-1].passed = bool(np.all(d[:, 1] <= d[:, 2] + 1e-12))
    rep.extra = {"quantiles": dict(zip(["q10", "q25", "q50", "q75", "q90"], map(float, q))),
                 "sup_distance": d[:, 0].tolist()}
    rep.timing = time.perf_counter() - t0
    return rep


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
