from __future__ import annotations

import math
import time

import pytest

from app.dynamics.bowen import bowen_root
from app.dynamics.periodic import FilterParams, PeriodicCatalog
from app.dynamics.potentials import Const, NegTLogAbsDeriv
from app.dynamics.pressure import PullbackSeparatedSets, p_p, p_p_c_limit, separated_series

pytestmark = pytest.mark.slow

LOG2 = math.log(2)
PHI = NegTLogAbsDeriv(t=0.5)
NS = range(1, 13)


@pytest.fixture(scope="module")
def basilica_sets(z2_minus_1, z2m1_large_sample):
    return PullbackSeparatedSets(z2_minus_1, z2m1_large_sample, 0.02)


@pytest.fixture(scope="module")
def basilica_catalog(z2_minus_1, z2m1_large_sample):
    return PeriodicCatalog(z2_minus_1, z2m1_large_sample)


@pytest.fixture(scope="module")
def basilica_periodic(z2_minus_1, z2m1_large_sample, basilica_catalog):
    started = time.perf_counter()
    estimate = p_p_c_limit(z2_minus_1, PHI, 0.2, [1.0, 0.5, 0.25], NS, z2m1_large_sample, basilica_catalog)
    return estimate, time.perf_counter() - started


def test_entropy_of_z2_within_budget(z2, z2_sample, z2_catalog):
    started = time.perf_counter()
    estimate = p_p(z2, Const(value=0.0), FilterParams(alpha=0.5, c=1.0), NS, z2_sample, z2_catalog)
    elapsed = time.perf_counter() - started
    assert abs(estimate.value - LOG2) <= 0.001
    assert elapsed <= 10


def test_basilica_c_series_is_non_decreasing(basilica_periodic):
    estimate, _ = basilica_periodic
    values = [point.value for point in estimate.diagnostics.c_series]
    assert [point.c for point in estimate.diagnostics.c_series] == [1.0, 0.5, 0.25][: len(values)]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_basilica_estimators_agree(z2_minus_1, z2m1_large_sample, basilica_periodic, basilica_sets):
    periodic, periodic_seconds = basilica_periodic
    started = time.perf_counter()
    separated = separated_series(z2_minus_1, PHI, z2m1_large_sample, NS, 0.02, sets=basilica_sets)
    elapsed = periodic_seconds + time.perf_counter() - started
    assert separated.diagnostics.converged
    assert separated.diagnostics.saturated_ns == []
    assert abs(periodic.value - separated.value) <= 0.05
    assert elapsed <= 300


def test_basilica_bowen_cross_check(z2_minus_1, z2m1_large_sample, basilica_catalog, basilica_sets):
    result = bowen_root(
        z2_minus_1,
        FilterParams(alpha=0.2, c=0.25),
        NS,
        z2m1_large_sample,
        catalog=basilica_catalog,
        cross_check=True,
        epsilon=0.02,
        sets=basilica_sets,
    )
    assert 1.0 < result.t_star < 1.5
    assert result.method_cross_check is not None
    assert abs(result.method_cross_check - result.t_star) <= 0.05
