from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from app.dynamics.rational_map import (
    INFINITY,
    Metric,
    RationalMap,
    default_metric,
    deriv,
    embed,
    evaluate,
    is_infinity,
    iterate,
    orbit_derivative,
    orbit_log_derivative,
    sphere_embedding,
    spherical_dist,
)
from app.shared.exceptions import EscapeError, PoleError

finite_points = st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False)
unit_disk = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)


def test_evaluate_and_derivative_of_quadratics(z2, z2_minus_1):
    assert evaluate(z2, 2) == 4
    assert evaluate(z2_minus_1, 0) == -1
    assert deriv(z2, 1.5) == pytest.approx(3.0)
    assert z2.degree == 2
    assert z2.is_polynomial


def test_coefficients_accept_pairs_and_dicts():
    from_pairs = RationalMap(numerator=[[-1, 0], [0, 0], [1, 0]], denominator=[[1, 0]])
    from_dicts = RationalMap(numerator=[{"re": -1, "im": 0}, 0, {"re": 1, "im": 0}])
    assert from_pairs.numerator == RationalMap.quadratic(-1).numerator
    assert from_dicts.fingerprint == RationalMap.quadratic(-1).fingerprint


def test_fingerprint_separates_maps(z2, z2_minus_1):
    assert z2.fingerprint != z2_minus_1.fingerprint
    assert RationalMap.quadratic(0).fingerprint == z2.fingerprint


@pytest.mark.parametrize(
    ("numerator", "denominator", "fragment"),
    [
        ([0, 1], [1], "degree must be at least 2"),
        ([-1, 0, 1], [-1, 1], "share a root"),
        ([1, 0, 1], [0], "leading coefficient must be nonzero"),
    ],
)
def test_invalid_maps_are_rejected(numerator, denominator, fragment):
    with pytest.raises(ValidationError) as excinfo:
        RationalMap(numerator=numerator, denominator=denominator)
    assert fragment in str(excinfo.value)


def test_poles_and_infinity_on_rational_map():
    inverse_square = RationalMap(numerator=[1], denominator=[0, 0, 1])
    assert is_infinity(inverse_square.evaluate(0))
    assert inverse_square.evaluate(INFINITY) == 0
    with pytest.raises(PoleError):
        inverse_square.derivative(0)
    with pytest.raises(PoleError):
        iterate(inverse_square, 0, 3)


def test_iterate_returns_orbit_segment(z2):
    segment = iterate(z2, 0.5, 3)
    assert segment.points == (0.5, 0.25, 0.0625)
    assert segment.length == 3


def test_iterate_raises_when_polynomial_orbit_escapes(z2):
    with pytest.raises(EscapeError):
        iterate(z2, 3, 2)


def test_orbit_derivative_closed_form(z2):
    # (f^3)'(z) = 8 z^7 for z^2
    assert orbit_derivative(z2, 0.5, 3) == pytest.approx(0.0625)
    assert orbit_derivative(z2, 0.5, 0) == 1


def test_orbit_log_derivative_does_not_overflow(z2):
    log_mag, arg = orbit_log_derivative(z2, 1.0, 2000)
    assert log_mag == pytest.approx(2000 * math.log(2), rel=1e-12)
    assert arg == pytest.approx(0.0)


@settings(max_examples=100, deadline=None)
@given(z=unit_disk, k=st.integers(min_value=1, max_value=6))
def test_chain_rule_matches_product_along_orbit(z, k):
    rmap = RationalMap.quadratic(-1)
    product = 1 + 0j
    w = z
    for _ in range(k):
        product *= rmap.derivative(w)
        w = rmap.evaluate(w)
    assert cmath.isclose(orbit_derivative(rmap, z, k), product, rel_tol=1e-9, abs_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(z=finite_points, w=finite_points, v=finite_points)
def test_chordal_distance_is_a_metric(z, w, v):
    d_zw = spherical_dist(z, w)
    assert d_zw == pytest.approx(spherical_dist(w, z))
    assert spherical_dist(z, z) == 0
    assert 0 <= d_zw <= 2 + 1e-12
    assert d_zw <= spherical_dist(z, v) + spherical_dist(v, w) + 1e-12


@settings(max_examples=100, deadline=None)
@given(z=finite_points, w=finite_points)
def test_sphere_embedding_reproduces_chordal_distance(z, w):
    a, b = sphere_embedding(z), sphere_embedding(w)
    assert np.linalg.norm(a) == pytest.approx(1.0)
    assert float(np.linalg.norm(a - b)) == pytest.approx(spherical_dist(z, w), abs=1e-12)


def test_distance_to_infinity():
    assert spherical_dist(INFINITY, INFINITY) == 0
    assert spherical_dist(0, INFINITY) == pytest.approx(2.0)
    assert spherical_dist(1, INFINITY) == pytest.approx(2 / math.sqrt(2))


# poles on |z| = 100 ** (1/3), outside the sampled annulus
RATIONAL = RationalMap(numerator=[1, 0, 1], denominator=[1, 0, 0, 0.01])


@settings(max_examples=60, deadline=None)
@given(z=st.complex_numbers(min_magnitude=0.3, max_magnitude=3.0, allow_nan=False, allow_infinity=False))
@pytest.mark.parametrize("rmap", [RationalMap.quadratic(-1), RationalMap.polynomial(0, 0, 0, 1), RATIONAL])
def test_derivative_matches_central_difference(rmap, z):
    h = 1e-6
    estimate = (evaluate(rmap, z + h) - evaluate(rmap, z - h)) / (2 * h)
    assert deriv(rmap, z) == pytest.approx(estimate, rel=1e-5, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(z=unit_disk, n=st.integers(min_value=2, max_value=12))
def test_iterate_steps_with_evaluate(z2, z, n):
    orbit = iterate(z2, z, n).points
    assert len(orbit) == n
    assert orbit[0] == z
    for before, after in zip(orbit, orbit[1:]):
        assert after == evaluate(z2, before)


@given(z=finite_points, w=finite_points)
def test_plane_metric_is_the_modulus_of_the_difference(z, w):
    assert float(np.linalg.norm(embed(z, Metric.euclidean) - embed(w, Metric.euclidean))) == pytest.approx(
        abs(z - w), rel=1e-12, abs=1e-12
    )


def test_default_metric_by_map_kind(z2):
    assert default_metric(z2) == Metric.euclidean
    assert default_metric(RATIONAL) == Metric.chordal
