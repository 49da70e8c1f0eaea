"""Rational maps of the Riemann sphere: evaluation, derivatives, iterates and orbit derivatives.

Coefficients are stored in ascending degree order. Polynomial maps carry the denominator (1,).
Every method accepts a Python complex or a numpy array and returns the same shape. The point at
infinity is the complex value `INFINITY` (any non-finite complex counts as infinity).
"""

from __future__ import annotations

import cmath
import hashlib
import math
from enum import Enum
from functools import cached_property
from typing import Any

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict, model_validator

from app.dynamics.roots import aberth_roots
from app.shared import messages
from app.shared.exceptions import DegenerateMapError, EscapeError, InvalidParameterError, PoleError

INFINITY = complex(math.inf, math.inf)
POLE_TOLERANCE = 1e-12
LOG_MAGNITUDE_THRESHOLD = 1e100
COPRIME_TOLERANCE = 1e-8


class Metric(str, Enum):
    euclidean = "euclidean"
    chordal = "chordal"


def is_infinity(z: complex) -> bool:
    return not cmath.isfinite(z)


def _coerce_coefficient(value: Any) -> complex:
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, list | tuple):
        if len(value) != 2:
            raise ValueError("complex coefficients are written as [re, im]")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def _coerce_coefficients(raw: Any) -> tuple[complex, ...]:
    if isinstance(raw, str | bytes) or not hasattr(raw, "__iter__"):
        raise ValueError("coefficients must be a list")
    coeffs = tuple(_coerce_coefficient(v) for v in raw)
    if not coeffs:
        raise ValueError(messages.EMPTY_COEFFICIENTS)
    return coeffs


def _scalar_or_array(value: np.ndarray, like: Any) -> Any:
    if np.ndim(like) == 0:
        item = value.item() if isinstance(value, np.ndarray) else value
        return item
    return value


class RationalMap(BaseModel):
    """A degree d >= 2 rational map P/Q given by ascending coefficient lists."""

    model_config = ConfigDict(frozen=True)

    numerator: tuple[complex, ...]
    denominator: tuple[complex, ...] = (1 + 0j,)
    pole_tolerance: float = POLE_TOLERANCE
    # When set, orbits may pass through infinity instead of raising PoleError
    sphere: bool = False

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        num = _coerce_coefficients(data.get("numerator", ()))
        den = _coerce_coefficients(data.get("denominator", (1.0,)))
        if len(den) == 1:
            if den[0] == 0:
                raise ValueError(messages.LEADING_COEFFICIENT_ZERO)
            num = tuple(a / den[0] for a in num)
            den = (1 + 0j,)
        data["numerator"] = num
        data["denominator"] = den
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> RationalMap:
        tol = self.pole_tolerance
        for coeffs in (self.numerator, self.denominator):
            scale = max(abs(a) for a in coeffs)
            if len(coeffs) > 1 and abs(coeffs[-1]) <= tol * scale:
                raise ValueError(messages.LEADING_COEFFICIENT_ZERO)
        if self.degree < 2:
            raise ValueError(messages.DEGREE_TOO_LOW)
        if len(self.denominator) > 1 and len(self.numerator) > 1:
            p_roots = aberth_roots(np.asarray(self.numerator))
            q_roots = aberth_roots(np.asarray(self.denominator))
            gap = np.min(np.abs(p_roots[:, None] - q_roots[None, :]))
            if gap <= COPRIME_TOLERANCE:
                raise ValueError(messages.COMMON_ROOT)
        return self

    @classmethod
    def polynomial(cls, *coefficients: complex) -> RationalMap:
        """Build a polynomial map from ascending coefficients, e.g. polynomial(-1, 0, 1) is z**2 - 1."""
        return cls(numerator=tuple(complex(c) for c in coefficients))

    @classmethod
    def quadratic(cls, c: complex) -> RationalMap:
        return cls.polynomial(c, 0, 1)

    # ------------------------------------------------------------------
    # Derived data
    # ------------------------------------------------------------------

    @property
    def degree(self) -> int:
        return max(len(self.numerator), len(self.denominator)) - 1

    @property
    def is_polynomial(self) -> bool:
        return len(self.denominator) == 1

    @cached_property
    def num_coeffs(self) -> np.ndarray:
        return np.asarray(self.numerator, dtype=np.complex128)

    @cached_property
    def den_coeffs(self) -> np.ndarray:
        return np.asarray(self.denominator, dtype=np.complex128)

    @cached_property
    def dnum_coeffs(self) -> np.ndarray:
        return npoly.polyder(self.num_coeffs) if len(self.num_coeffs) > 1 else np.zeros(1, dtype=np.complex128)

    @cached_property
    def dden_coeffs(self) -> np.ndarray:
        return npoly.polyder(self.den_coeffs) if len(self.den_coeffs) > 1 else np.zeros(1, dtype=np.complex128)

    @cached_property
    def escape_radius(self) -> float:
        """R = max(2, 2 max|coeff|); meaningful for polynomial maps."""
        return max(2.0, 2.0 * float(np.max(np.abs(self.num_coeffs))))

    @cached_property
    def fingerprint(self) -> str:
        """sha256 over the canonical 17-significant-digit rendering of the coefficients."""
        parts = [
            "num:" + ",".join(f"{a.real:.17g}:{a.imag:.17g}" for a in self.numerator),
            "den:" + ",".join(f"{a.real:.17g}:{a.imag:.17g}" for a in self.denominator),
        ]
        return hashlib.sha256(";".join(parts).encode("utf-8")).hexdigest()

    @cached_property
    def value_at_infinity(self) -> complex:
        p_deg, q_deg = len(self.numerator) - 1, len(self.denominator) - 1
        if p_deg > q_deg:
            return INFINITY
        if p_deg == q_deg:
            return self.numerator[-1] / self.denominator[-1]
        return 0j

    @cached_property
    def critical_points(self) -> tuple[complex, ...]:
        """Finite critical points: roots of P'Q - PQ'."""
        w = npoly.polysub(npoly.polymul(self.dnum_coeffs, self.den_coeffs), npoly.polymul(self.num_coeffs, self.dden_coeffs))
        w = np.trim_zeros(w, "b")
        if len(w) <= 1:
            return ()
        return tuple(complex(r) for r in aberth_roots(w))

    def to_coefficient_pairs(self) -> dict[str, list[list[float]]]:
        return {
            "numerator": [[a.real, a.imag] for a in self.numerator],
            "denominator": [[a.real, a.imag] for a in self.denominator],
        }

    def __str__(self) -> str:
        def fmt(coeffs: tuple[complex, ...]) -> str:
            return "[" + ", ".join(f"{a.real:g}{a.imag:+g}j" if a.imag else f"{a.real:g}" for a in coeffs) + "]"

        return f"RationalMap(num={fmt(self.numerator)}, den={fmt(self.denominator)})"

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def evaluate(self, z: Any) -> Any:
        """f(z) with pole detection; returns INFINITY at poles and f(inf) at infinity."""
        arr = np.asarray(z, dtype=np.complex128)
        finite = np.isfinite(arr)
        safe = np.where(finite, arr, 0)
        with np.errstate(all="ignore"):
            p = npoly.polyval(safe, self.num_coeffs)
            if self.is_polynomial:
                out = p
            else:
                q = npoly.polyval(safe, self.den_coeffs)
                modulus = np.abs(safe)
                q_scale = npoly.polyval(modulus, np.abs(self.den_coeffs))
                p_scale = npoly.polyval(modulus, np.abs(self.num_coeffs))
                small_q = np.abs(q) <= self.pole_tolerance * q_scale
                small_p = np.abs(p) <= self.pole_tolerance * p_scale
                degenerate = small_q & small_p & finite
                if np.any(degenerate):
                    raise DegenerateMapError(
                        "numerator and denominator vanish together",
                        z=str(arr[degenerate].ravel()[0]),
                    )
                out = np.where(small_q, INFINITY, p / np.where(small_q, 1.0, q))
        out = np.where(finite, out, self.value_at_infinity)
        return _scalar_or_array(out, z)

    def _check_poles(self, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if not np.all(np.isfinite(arr)):
            raise PoleError("derivative requested at infinity")
        q = npoly.polyval(arr, self.den_coeffs)
        if not self.is_polynomial:
            q_scale = npoly.polyval(np.abs(arr), np.abs(self.den_coeffs))
            near_pole = np.abs(q) <= self.pole_tolerance * q_scale
            if np.any(near_pole):
                raise PoleError("derivative requested at a pole", z=str(arr[near_pole].ravel()[0]))
        return q, npoly.polyval(arr, self.num_coeffs)

    def derivative(self, z: Any) -> Any:
        """f'(z) = (P'Q - PQ')/Q**2."""
        arr = np.asarray(z, dtype=np.complex128)
        q, p = self._check_poles(arr)
        dp = npoly.polyval(arr, self.dnum_coeffs)
        if self.is_polynomial:
            out = dp / q
        else:
            dq = npoly.polyval(arr, self.dden_coeffs)
            out = (dp * q - p * dq) / (q * q)
        return _scalar_or_array(out, z)

    def log_abs_derivative(self, z: Any) -> Any:
        """log|f'(z)| computed as log|P'Q - PQ'| - 2 log|Q|; -inf at critical points."""
        arr = np.asarray(z, dtype=np.complex128)
        q, p = self._check_poles(arr)
        dp = npoly.polyval(arr, self.dnum_coeffs)
        with np.errstate(divide="ignore"):
            if self.is_polynomial:
                out = np.log(np.abs(dp)) - np.log(np.abs(q))
            else:
                dq = npoly.polyval(arr, self.dden_coeffs)
                out = np.log(np.abs(dp * q - p * dq)) - 2.0 * np.log(np.abs(q))
        return _scalar_or_array(out, z)

    def step_unchecked(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(f(z), f'(z)) over an array without pole checks; poles give non-finite values."""
        with np.errstate(all="ignore"):
            p = npoly.polyval(z, self.num_coeffs)
            dp = npoly.polyval(z, self.dnum_coeffs)
            if self.is_polynomial:
                return p, dp
            q = npoly.polyval(z, self.den_coeffs)
            dq = npoly.polyval(z, self.dden_coeffs)
            return p / q, (dp * q - p * dq) / (q * q)

    def iterate_with_derivative(self, z: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(f^n(z), (f^n)'(z)) by forward iteration and the chain rule, vectorized and unchecked."""
        w = np.asarray(z, dtype=np.complex128)
        dw = np.ones_like(w)
        with np.errstate(all="ignore"):
            for _ in range(n):
                w, d = self.step_unchecked(w)
                dw = dw * d
        return w, dw


class OrbitSegment(BaseModel):
    """The first n points z, f(z), ..., f^{n-1}(z) of an orbit."""

    model_config = ConfigDict(frozen=True)

    points: tuple[complex, ...]

    @property
    def length(self) -> int:
        return len(self.points)

    @property
    def last(self) -> complex:
        return self.points[-1]


def evaluate(rmap: RationalMap, z: complex) -> complex:
    return rmap.evaluate(z)


def deriv(rmap: RationalMap, z: complex) -> complex:
    return rmap.derivative(z)


def iterate(rmap: RationalMap, z: complex, n: int) -> OrbitSegment:
    """Orbit segment of length n; escaping polynomial orbits and pole hits raise."""
    if n < 1:
        raise InvalidParameterError("iterate needs n >= 1", n=n)
    radius = rmap.escape_radius
    points: list[complex] = []
    w = complex(z)
    for step in range(n):
        if is_infinity(w):
            if rmap.is_polynomial or not rmap.sphere:
                raise PoleError("orbit reached infinity", step=step)
        elif rmap.is_polynomial and abs(w) > radius:
            raise EscapeError("orbit left the escape disk", step=step, radius=radius)
        points.append(w)
        if step < n - 1:
            w = complex(rmap.evaluate(w))
    return OrbitSegment(points=tuple(points))


def orbit_log_derivative(rmap: RationalMap, z: complex, k: int) -> tuple[float, float]:
    """(log|(f^k)'(z)|, arg (f^k)'(z)) accumulated without overflow."""
    if k < 0:
        raise InvalidParameterError("orbit_derivative needs k >= 0", k=k)
    acc = 1 + 0j
    log_mag = 0.0
    w = complex(z)
    threshold = LOG_MAGNITUDE_THRESHOLD
    for _ in range(k):
        acc *= complex(rmap.derivative(w))
        if acc == 0:
            return -math.inf, 0.0
        m = abs(acc)
        if m > threshold or m < 1.0 / threshold:
            log_mag += math.log(m)
            acc /= m
        w = complex(rmap.evaluate(w))
    return log_mag + math.log(abs(acc)), cmath.phase(acc)


def orbit_derivative(rmap: RationalMap, z: complex, k: int) -> complex:
    """(f^k)'(z) by the chain rule; k = 0 gives 1."""
    log_mag, arg = orbit_log_derivative(rmap, z, k)
    if log_mag == -math.inf:
        return 0j
    with np.errstate(over="ignore"):
        magnitude = float(np.exp(log_mag))
    return complex(magnitude * math.cos(arg), magnitude * math.sin(arg))


def sphere_embedding(z: Any) -> np.ndarray:
    """Stereographic image on the unit sphere; Euclidean distance there is the chordal metric."""
    arr = np.asarray(z, dtype=np.complex128)
    finite = np.isfinite(arr)
    safe = np.where(finite, arr, 0)
    r2 = safe.real**2 + safe.imag**2
    out = np.stack([2 * safe.real / (1 + r2), 2 * safe.imag / (1 + r2), (r2 - 1) / (r2 + 1)], axis=-1)
    out[~finite] = (0.0, 0.0, 1.0)
    return out


def plane_embedding(z: Any) -> np.ndarray:
    arr = np.asarray(z, dtype=np.complex128)
    return np.stack([arr.real, arr.imag], axis=-1)


def embed(z: Any, metric: Metric) -> np.ndarray:
    return sphere_embedding(z) if metric == Metric.chordal else plane_embedding(z)


def default_metric(rmap: RationalMap) -> Metric:
    return Metric.euclidean if rmap.is_polynomial else Metric.chordal


def spherical_dist(z: complex, w: complex) -> float:
    """Chordal distance 2|z-w| / sqrt((1+|z|^2)(1+|w|^2)), extended to infinity."""
    z_inf, w_inf = is_infinity(z), is_infinity(w)
    if z_inf and w_inf:
        return 0.0
    if z_inf or w_inf:
        other = w if z_inf else z
        return 2.0 / math.sqrt(1.0 + abs(other) ** 2)
    return 2.0 * abs(z - w) / math.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))
