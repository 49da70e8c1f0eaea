from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from app.dynamics.periodic import (
    FilterParams,
    PeriodicCatalog,
    PeriodicPoint,
    PointKind,
    brute_force_membership,
    classify,
    classify_repelling,
    dedup_roots,
    expected_count,
    filter_per_alpha_c,
    find_periodic,
    n_max,
)
from app.dynamics.rational_map import RationalMap
from app.shared.exceptions import InvalidParameterError

BOUNDARY_LOW, BOUNDARY_HIGH = 0.98, 1.02


def test_expected_counts(z2, z3):
    assert expected_count(z2, 3) == 8
    assert expected_count(z3, 2) == 9
    inverse_square = RationalMap(numerator=[1], denominator=[0, 0, 1])
    # infinity is fixed by f^2 but not by f
    assert expected_count(inverse_square, 1) == 3
    assert expected_count(inverse_square, 2) == 4


def test_n_max_follows_budget(z2, z3):
    assert n_max(z2) == 14
    assert n_max(z3) == 8
    assert n_max(z2, 2**10) == 10


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_z2_enumeration_is_complete_for_small_n(z2_catalog, n):
    points, report = z2_catalog.get(n)
    assert report.found == 2**n
    assert report.complete
    assert report.unresolved_multiplicity == 0
    assert all(p.residual <= 1e-9 for p in points)


def test_z2_multipliers_and_classification(z2_catalog):
    points = z2_catalog.points(3)
    zero = [p for p in points if abs(p.z) < 1e-12]
    assert len(zero) == 1
    assert classify(zero[0]) == PointKind.attracting
    others = [p for p in points if abs(p.z) >= 1e-12]
    assert all(p.abs_multiplier == pytest.approx(8.0) for p in others)
    assert all(classify_repelling(p) for p in others)
    assert sorted(p.primitive_period for p in points) == [1, 1, 3, 3, 3, 3, 3, 3]


@pytest.mark.slow
@pytest.mark.parametrize("n", [8, 10, 12])
def test_z2_enumeration_is_complete_for_large_n(z2_catalog, n):
    report = z2_catalog.report(n)
    assert report.found == 2**n
    assert report.complete


@pytest.mark.slow
@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_basilica_enumeration_mostly_complete(z2m1_catalog, n):
    report = z2m1_catalog.report(n)
    assert report.found >= 0.95 * 2**n
    assert report.complete == (report.found == 2**n)


def test_find_periodic_rejects_n_over_budget(z2, z2_sample):
    with pytest.raises(InvalidParameterError):
        find_periodic(z2, 15, z2_sample)


def test_primitive_period_must_divide_n():
    with pytest.raises(ValidationError):
        PeriodicPoint(z=1.0, n=4, primitive_period=3, multiplier=2.0, residual=0.0)


@pytest.mark.parametrize(("alpha", "c"), [(0.0, 0.5), (-1.0, 0.5), (0.2, 0.0), (0.2, 1.5)])
def test_filter_params_validation(alpha, c):
    with pytest.raises(ValidationError):
        FilterParams(alpha=alpha, c=c)


def test_filter_on_z2(z2, z2_catalog):
    points = z2_catalog.points(4)
    kept = filter_per_alpha_c(points, z2, FilterParams(alpha=0.5, c=1.0))
    assert len(kept) == 2**4 - 1
    assert all(abs(p.z) > 0.5 for p in kept)
    # alpha above log 2 removes everything
    assert filter_per_alpha_c(points, z2, FilterParams(alpha=0.7, c=1.0)) == []
    assert filter_per_alpha_c([], z2, FilterParams(alpha=0.5, c=1.0)) == []


@settings(max_examples=500)
@given(
    alpha=st.floats(min_value=0.01, max_value=1.0),
    alpha_drop=st.floats(min_value=0.0, max_value=0.5),
    c=st.floats(min_value=0.01, max_value=1.0),
    c_factor=st.floats(min_value=0.01, max_value=1.0),
    n=st.integers(min_value=2, max_value=6),
)
def test_filter_is_monotone_in_alpha_and_c(z2_minus_1, z2m1_catalog, alpha, alpha_drop, c, c_factor, n):
    points = z2m1_catalog.points(n)
    strict = filter_per_alpha_c(points, z2_minus_1, FilterParams(alpha=alpha, c=c))
    loose = filter_per_alpha_c(
        points, z2_minus_1, FilterParams(alpha=max(alpha - alpha_drop, 1e-3), c=c * c_factor)
    )
    assert {p.z for p in strict} <= {p.z for p in loose}


def _is_boundary(p: PeriodicPoint, params: FilterParams, K: int) -> bool:
    rho = p.abs_multiplier * math.exp(-p.n * params.alpha)
    if BOUNDARY_LOW < rho < BOUNDARY_HIGH:
        return True
    return rho <= BOUNDARY_LOW and rho ** (K // p.n) >= params.c


@pytest.mark.slow
def test_filter_agrees_with_brute_force(z2, z2_minus_1, z2_catalog, z2m1_catalog):
    rng = random.Random(2024)
    K = 500
    checked = boundary = 0
    for _ in range(200):
        params = FilterParams(alpha=rng.uniform(0.01, 1.0), c=rng.uniform(0.01, 1.0))
        for rmap, catalog in ((z2, z2_catalog), (z2_minus_1, z2m1_catalog)):
            n = rng.randint(1, 8)
            points = catalog.points(n)
            kept = {p.z for p in filter_per_alpha_c(points, rmap, params)}
            for p in points:
                if _is_boundary(p, params, K):
                    boundary += 1
                    continue
                assert (p.z in kept) == brute_force_membership(p, rmap, params, K), (p, params)
                checked += 1
    assert checked > boundary


def test_brute_force_needs_k_at_least_n(z2, z2_catalog):
    p = z2_catalog.points(3)[-1]
    with pytest.raises(InvalidParameterError):
        brute_force_membership(p, z2, FilterParams(alpha=0.2, c=1.0), 2)


def test_dedup_keeps_one_root_per_cluster_without_pairwise_lists():
    rng = np.random.default_rng(7)
    centres = np.asarray([0.5 + 0.25j, -1.0 + 0.0j, 2.0 - 1.0j])
    # 200k converged seeds on three fixed points; pairwise neighbour lists would need ~1.3e10 entries
    points = np.repeat(centres, 200_000 // 3 + 1)
    points = points + 1e-11 * (rng.standard_normal(len(points)) + 1j * rng.standard_normal(len(points)))
    residuals = rng.uniform(0.0, 1.0, len(points))
    keep = dedup_roots(points, residuals, 1e-8)
    assert len(keep) == 3
    for idx in keep:
        cluster = np.abs(points - points[idx]) < 1e-6
        assert residuals[idx] == residuals[cluster].min()


def test_dedup_of_nothing():
    assert dedup_roots(np.empty(0, dtype=np.complex128), np.empty(0), 1e-8).size == 0


@pytest.mark.slow
@pytest.mark.parametrize("n", [1, 2, 3])
def test_basilica_enumeration_from_default_sample_size(z2_minus_1, z2m1_large_sample, n):
    catalog = PeriodicCatalog(z2_minus_1, z2m1_large_sample)
    report = catalog.report(n)
    assert report.found == 2**n
    assert report.complete


@pytest.mark.parametrize("n", [4, 6])
def test_divisor_periods_are_enumerated_again(z2_catalog, n):
    points = z2_catalog.points(n)
    zs = np.asarray([p.z for p in points])
    for m in range(1, n):
        if n % m:
            continue
        for q in z2_catalog.points(m):
            assert np.min(np.abs(zs - q.z)) < 1e-8
    # a point of primitive period m is listed by every multiple of m
    counts = {m: sum(1 for p in points if p.primitive_period == m) for m in range(1, n + 1) if n % m == 0}
    assert sum(counts.values()) == 2**n
    assert counts[1] == 2


@pytest.mark.parametrize("n", [3, 4])
def test_filtered_set_is_closed_under_the_map(z2_minus_1, z2m1_catalog, n):
    assert z2m1_catalog.report(n).complete
    kept = filter_per_alpha_c(z2m1_catalog.points(n), z2_minus_1, FilterParams(alpha=0.2, c=0.25))
    assert kept
    zs = np.asarray([p.z for p in kept])
    images = z2_minus_1.evaluate(zs)
    for w in images:
        assert np.min(np.abs(zs - w)) < 1e-7
