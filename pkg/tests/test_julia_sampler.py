from __future__ import annotations

import math

import numpy as np
import pytest

from app.dynamics.julia import (
    Generator,
    boundary_scan_sample,
    escape_classify,
    escape_times,
    inverse_iteration_sample,
    min_potential,
    repelling_fixed_point,
)
from app.dynamics.potentials import Const, CoordRe, NegTLogAbsDeriv
from app.dynamics.rational_map import RationalMap
from app.shared.exceptions import InvalidParameterError


def test_escape_classify_known_points(z2, z2_minus_1):
    escaped = escape_classify(z2, 2, 50)
    assert escaped.escaped and escaped.step == 1
    assert str(escaped) == "escaped(1)"
    assert str(escape_classify(z2, 0.5, 50)) == "bounded"
    assert not escape_classify(z2_minus_1, 0, 100).escaped


def test_escape_classify_needs_polynomial():
    with pytest.raises(InvalidParameterError):
        escape_classify(RationalMap(numerator=[1], denominator=[0, 0, 1]), 0.5, 10)


def test_repelling_fixed_point_of_z2(z2):
    assert repelling_fixed_point(z2) == pytest.approx(1.0)


def test_inverse_iteration_on_z2_lands_on_unit_circle(z2_sample):
    moduli = np.abs(z2_sample.array)
    assert len(z2_sample) == 4000
    assert z2_sample.generator == Generator.inverse_iteration
    assert np.all(np.abs(moduli - 1.0) <= 1e-6)


def test_inverse_iteration_on_basilica_stays_bounded(z2_minus_1, z2m1_sample):
    points = z2m1_sample.array
    assert np.all(np.abs(points) <= 1 + math.sqrt(2))
    images = z2_minus_1.evaluate(points)
    bounded = escape_times(z2_minus_1, images, 20) < 0
    assert bounded.mean() >= 0.99


def test_inverse_iteration_is_deterministic(z2_minus_1):
    first = inverse_iteration_sample(z2_minus_1, 500, 16, seed=7)
    second = inverse_iteration_sample(z2_minus_1, 500, 16, seed=7)
    other = inverse_iteration_sample(z2_minus_1, 500, 16, seed=8)
    assert first.points == second.points
    assert first.points != other.points


def test_inverse_iteration_covers_the_circle(z2):
    sample = inverse_iteration_sample(z2, 10_000, 32, seed=1)
    angles = np.mod(np.angle(sample.array), 2 * math.pi)
    counts = np.bincount((angles / (2 * math.pi / 64)).astype(int).clip(0, 63), minlength=64)
    assert np.all(counts > 0)


def test_empty_sample_is_rejected(z2):
    with pytest.raises(InvalidParameterError):
        inverse_iteration_sample(z2, 0, 16, seed=0)


def test_min_potential_on_known_potentials(z2, z2_sample):
    assert min_potential(z2_sample, z2, Const(value=0.0)) == 0.0
    assert min_potential(z2_sample, z2, NegTLogAbsDeriv(t=1.0)) == pytest.approx(-math.log(2), abs=1e-6)
    assert min_potential(z2_sample, z2, CoordRe()) == pytest.approx(-1.0, abs=1e-3)


def test_boundary_scan_is_deterministic_and_bounded(z2_minus_1):
    first = boundary_scan_sample(z2_minus_1, 2000, seed=3, resolution=200)
    second = boundary_scan_sample(z2_minus_1, 2000, seed=3, resolution=200)
    assert first.points == second.points
    assert 0 < len(first) <= 2000
    assert first.generator == Generator.boundary_scan
    assert np.all(escape_times(z2_minus_1, first.array, 64) < 0)


def test_boundary_scan_needs_polynomial():
    with pytest.raises(InvalidParameterError):
        boundary_scan_sample(RationalMap(numerator=[1], denominator=[0, 0, 1]), 100, seed=0)
