import json
import math

import numpy as np
import pytest

from sphcrit.densities import CriticalKind, Interval, REAL_LINE
from sphcrit.errors import DomainError
from sphcrit.experiments import (SCHEMA_VERSION, ExperimentConfig, MetricRecord, clear_cache, quality_stats,
                                 run_cdf_experiment, run_mean_experiment, run_variance_experiment, simulate,
                                 sup_distances, with_overrides, within)


def test_config_parsing_and_validation():
    cfg = ExperimentConfig.from_mapping({"ell": "12", "kind": "s", "interval": "1,", "C": "3"})
    assert cfg.ell == 12 and cfg.kind is CriticalKind.SADDLE
    assert cfg.interval == Interval(1.0, math.inf)
    assert cfg.regime_constant_C == 3.0
    assert ExperimentConfig(kind="e", interval="0,1").interval == Interval(0.0, 1.0)
    for bad in ({"ell": 0}, {"realizations": 0}, {"oversample": 2}, {"workers": 0}):
        with pytest.raises(DomainError):
            ExperimentConfig(**bad)
    with pytest.raises(DomainError):
        ExperimentConfig.from_mapping({"colour": "red"})
    assert with_overrides(cfg, ell=13).ell == 13


def test_config_roundtrip():
    cfg = ExperimentConfig(ell=9, kind="s", interval="0.5,")
    assert ExperimentConfig.from_mapping(cfg.to_dict()) == cfg


def test_within():
    assert within(1.02, 1.0, 0.03, True)
    assert not within(1.04, 1.0, 0.03, True)
    assert within(5.0, 4.0, 1.0, False)
    assert not within(float("nan"), 1.0, 1.0, False)


def test_simulate_deterministic_and_cached():
    clear_cache()
    a = simulate(6, 5, 3)
    clear_cache()
    b = simulate(6, 5, 3)
    for ra, rb in zip(a, b):
        assert np.array_equal(ra.values, rb.values)
    assert [r.index for r in simulate(6, 3, 3, start=2)] == [2, 3, 4]
    assert simulate(6, 2, 3)[0] is simulate(6, 2, 3)[0]


def test_worker_count_invariance():
    clear_cache()
    serial = simulate(8, 6, 17)
    clear_cache()
    parallel = simulate(8, 6, 17, workers=2)
    assert all(np.array_equal(s.values, p.values) and np.array_equal(s.kinds, p.kinds)
               for s, p in zip(serial, parallel))


def test_realization_counts_partition():
    r = simulate(10, 1, 5)[0]
    iv = Interval(-0.5, 1.2)
    assert r.count("e", iv) + r.count("s", iv) == r.count("c", iv)
    assert r.count("c", REAL_LINE) == r.values.size
    q = quality_stats(simulate(10, 4, 5))
    assert q["realizations"] == 4 and q["morse_failures"] == 0


def test_mean_report_schema():
    rep = run_mean_experiment(ExperimentConfig(ell=10, realizations=20, seed=2))
    d = rep.to_dict()
    assert d["schema_version"] == SCHEMA_VERSION
    assert len(d["records"]) == 2
    json.dumps(d)
    assert rep.extra["standard_error"] > 0


def test_variance_needs_enough_realizations():
    with pytest.raises(DomainError):
        run_variance_experiment(ExperimentConfig(ell=10, realizations=99))


def test_cdf_report_and_bound():
    rep = run_cdf_experiment(ExperimentConfig(ell=15, realizations=10, seed=4))
    assert rep.records[1].passed
    fstar, f, slack = sup_distances(simulate(15, 1, 4)[0], 15)
    assert f <= slack + 1e-12
    assert 0 <= fstar <= 1


def test_metric_record_sets_passed():
    assert MetricRecord("x", 1.0, 1.0, 0.0, False, "test").passed
    assert not MetricRecord("x", 2.0, 1.0, 0.5, True, "test").passed
