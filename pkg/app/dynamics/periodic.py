"""Periodic points: enumeration of the fixed points of f^n, classification and the (alpha, c) filter."""

from __future__ import annotations

import cmath
import math
from enum import Enum
from typing import TYPE_CHECKING, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator
from scipy.spatial import cKDTree

from app.dynamics.rational_map import INFINITY, RationalMap, sphere_embedding
from app.models.Reports import EnumerationReport
from app.shared import messages
from app.shared.exceptions import InvalidParameterError
from app.shared.LoggerSingleton import logger
from app.shared.metrics import newton_seeds_total
from app.tasks.pool import concatenate, map_chunks

if TYPE_CHECKING:
    from app.dynamics.julia import JuliaSample
    from app.shared.config import Settings


class PointKind(str, Enum):
    attracting = "attracting"
    indifferent = "indifferent"
    repelling = "repelling"


class PeriodicPoint(BaseModel):
    """A fixed point of f^n; n is the period under consideration, not necessarily primitive."""

    model_config = ConfigDict(frozen=True)

    z: complex
    n: int = Field(ge=1)
    primitive_period: int = Field(ge=1)
    multiplier: complex
    residual: float = Field(ge=0.0)

    @field_validator("primitive_period")
    @classmethod
    def _divides_n(cls, value: int, info: ValidationInfo) -> int:
        n = info.data.get("n")
        if n is not None and n % value != 0:
            raise ValueError("primitive_period must divide n")
        return value

    @property
    def abs_multiplier(self) -> float:
        return abs(self.multiplier)

    @property
    def log_abs_multiplier(self) -> float:
        modulus = abs(self.multiplier)
        return math.log(modulus) if modulus > 0 else -math.inf


class FilterParams(BaseModel):
    """(alpha, c) of the filtered set Per_n(alpha, c)."""

    model_config = ConfigDict(frozen=True)

    alpha: float
    c: float

    @field_validator("alpha")
    @classmethod
    def _alpha_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(messages.ALPHA_NOT_POSITIVE)
        return value

    @field_validator("c")
    @classmethod
    def _c_in_range(cls, value: float) -> float:
        if not 0 < value <= 1:
            raise ValueError(messages.C_OUT_OF_RANGE)
        return value


class SearchOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iterations: int = 200
    max_halvings: int = 30
    tolerance: float = 1e-10
    dedup_tolerance: float = 1e-8
    period_tolerance: float = 1e-7
    classification_margin: float = 1e-6
    max_points: int = 2**14
    threads: int = 1
    chunk_size: int = 4096

    @classmethod
    def from_settings(cls, settings: Settings) -> SearchOptions:
        return cls(
            max_iterations=settings.newton_max_iterations,
            max_halvings=settings.newton_max_halvings,
            tolerance=settings.newton_tolerance,
            dedup_tolerance=settings.dedup_tolerance,
            period_tolerance=settings.period_tolerance,
            classification_margin=settings.classification_margin,
            max_points=settings.max_periodic_points,
            threads=settings.threads,
            chunk_size=settings.newton_chunk_size,
        )


class PeriodicStore(Protocol):
    """Persistence for enumerations keyed by (map fingerprint, n)."""

    def load(self, rmap: RationalMap, n: int) -> tuple[list[PeriodicPoint], EnumerationReport] | None: ...

    def save(self, rmap: RationalMap, n: int, points: list[PeriodicPoint], report: EnumerationReport) -> None: ...


def n_max(rmap: RationalMap, max_points: int = 2**14) -> int:
    """Largest n with d**n within the periodic-point budget."""
    n = 0
    while rmap.degree ** (n + 1) <= max_points:
        n += 1
    return n


def expected_count(rmap: RationalMap, n: int) -> int:
    """Finite fixed points of f^n counted with multiplicity."""
    if rmap.is_polynomial:
        return rmap.degree**n
    w = INFINITY
    for _ in range(n):
        w = complex(rmap.evaluate(w))
    infinity_fixed = not cmath.isfinite(w)
    return rmap.degree**n + 1 - (1 if infinity_fixed else 0)


# ----------------------------------------------------------------------
# Damped Newton on g(z) = f^n(z) - z
# ----------------------------------------------------------------------


def _residual(rmap: RationalMap, z: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    w, dw = rmap.iterate_with_derivative(z, n)
    return w - z, dw - 1.0


def _damped_newton(rmap: RationalMap, n: int, seeds: np.ndarray, options: SearchOptions) -> tuple[np.ndarray, np.ndarray]:
    """Run Newton with step halving on every seed; returns (points, converged mask)."""
    z = np.array(seeds, dtype=np.complex128, copy=True)
    g, dg = _residual(rmap, z, n)
    g_abs = np.abs(g)
    # 0 active, 1 converged, 2 stalled
    status = np.where(np.isfinite(g_abs), 0, 2)

    with np.errstate(all="ignore"):
        for _ in range(options.max_iterations):
            done = (status == 0) & (g_abs <= options.tolerance * (1.0 + np.abs(z)))
            status[done] = 1
            pending = np.flatnonzero(status == 0)
            if pending.size == 0:
                break
            step = g[pending] / dg[pending]
            bad = ~np.isfinite(step)
            status[pending[bad]] = 2
            pending, step = pending[~bad], step[~bad]
            scale = 1.0
            for _ in range(options.max_halvings + 1):
                if pending.size == 0:
                    break
                trial = z[pending] - scale * step
                g_trial, dg_trial = _residual(rmap, trial, n)
                g_trial_abs = np.abs(g_trial)
                accepted = np.isfinite(g_trial_abs) & (g_trial_abs < g_abs[pending])
                hit = pending[accepted]
                z[hit], g[hit], dg[hit], g_abs[hit] = trial[accepted], g_trial[accepted], dg_trial[accepted], g_trial_abs[accepted]
                pending, step = pending[~accepted], step[~accepted]
                scale *= 0.5
            status[pending] = 2
        final = (status != 2) & (g_abs <= options.tolerance * (1.0 + np.abs(z)))
        status[final] = 1

        # one polishing step, kept only where it does not increase the residual
        conv = np.flatnonzero(status == 1)
        if conv.size:
            step = g[conv] / dg[conv]
            trial = z[conv] - np.where(np.isfinite(step), step, 0.0)
            g_trial, _ = _residual(rmap, trial, n)
            better = np.isfinite(g_trial) & (np.abs(g_trial) <= g_abs[conv])
            z[conv[better]] = trial[better]

    return z, status == 1


def _newton_all(rmap: RationalMap, n: int, seeds: np.ndarray, options: SearchOptions) -> np.ndarray:
    results = map_chunks(
        lambda chunk: _damped_newton(rmap, n, chunk, options),
        seeds,
        threads=options.threads,
        chunk_size=options.chunk_size,
    )
    points = concatenate([z[ok] for z, ok in results])
    converged = int(sum(int(ok.sum()) for _, ok in results))
    newton_seeds_total.labels(result="converged").inc(converged)
    newton_seeds_total.labels(result="stalled").inc(len(seeds) - converged)
    return points


def dedup_roots(points: np.ndarray, residuals: np.ndarray, tolerance: float) -> np.ndarray:
    """Indices of cluster representatives; within a cluster the smallest residual wins.

    Only representatives query the tree; memory is linear in the number of roots.
    """
    if len(points) == 0:
        return np.empty(0, dtype=np.int64)
    embedded = sphere_embedding(points)
    tree = cKDTree(embedded)
    order = np.lexsort((np.arange(len(points)), residuals))
    taken = np.zeros(len(points), dtype=bool)
    keep: list[int] = []
    for idx in order:
        if taken[idx]:
            continue
        keep.append(int(idx))
        taken[tree.query_ball_point(embedded[idx], r=tolerance)] = True
    return np.asarray(keep, dtype=np.int64)


def orbit_matrix(rmap: RationalMap, z: np.ndarray, length: int) -> np.ndarray:
    """Rows (z, f z, ..., f^{length-1} z) for each input point."""
    z = np.asarray(z, dtype=np.complex128).ravel()
    out = np.empty((len(z), length), dtype=np.complex128)
    w = z
    for k in range(length):
        out[:, k] = w
        if k < length - 1:
            w, _ = rmap.step_unchecked(w)
    return out


def orbit_log_derivatives(rmap: RationalMap, points: list[PeriodicPoint]) -> np.ndarray:
    """Matrix L[j, i] = log|f'(f^i z_j)| over one period of each point."""
    if not points:
        return np.empty((0, 0), dtype=np.float64)
    n = points[0].n
    orbits = orbit_matrix(rmap, np.asarray([p.z for p in points]), n)
    _, derivative = rmap.step_unchecked(orbits)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(derivative))


def _primitive_periods(rmap: RationalMap, z: np.ndarray, n: int, tolerance: float) -> np.ndarray:
    periods = np.full(len(z), n, dtype=np.int64)
    unresolved = np.ones(len(z), dtype=bool)
    w = z.copy()
    for m in range(1, n):
        w, _ = rmap.step_unchecked(w)
        if n % m:
            continue
        back = unresolved & (np.abs(w - z) <= tolerance * (1.0 + np.abs(z)))
        periods[back] = m
        unresolved &= ~back
    return periods


def _seeds(
    rmap: RationalMap,
    n: int,
    sample: JuliaSample,
    divisor_points: list[PeriodicPoint],
) -> np.ndarray:
    count = rmap.degree**n + 1
    sample_points = sample.array[np.isfinite(sample.array)]
    radius = max(float(np.max(np.abs(sample_points))) if len(sample_points) else 1.0, 1e-3)
    radius *= 1.0 + 1.0 / rmap.degree**n
    angles = 2.0 * np.pi * np.arange(count) / count
    ring = radius * np.exp(1j * angles)

    critical = np.asarray(rmap.critical_points, dtype=np.complex128)
    critical_orbits = orbit_matrix(rmap, critical, n + 1).ravel() if len(critical) else critical
    divisors = np.asarray([p.z for p in divisor_points], dtype=np.complex128)

    seeds = np.concatenate([sample_points, ring, critical_orbits, divisors])
    return seeds[np.isfinite(seeds)]


def find_periodic(
    rmap: RationalMap,
    n: int,
    sample: JuliaSample,
    options: SearchOptions | None = None,
    divisor_points: list[PeriodicPoint] | None = None,
) -> tuple[list[PeriodicPoint], EnumerationReport]:
    """Enumerate the fixed points of f^n.

    Damped Newton runs on g(z) = f^n(z) - z from the sample, a ring just outside it, the critical
    orbits and the divisor-period points. Converged roots are closed under f, polished and
    deduplicated in chordal distance. Missing roots are reported through the EnumerationReport.
    """
    options = options or SearchOptions()
    limit = n_max(rmap, options.max_points)
    if not 1 <= n <= limit:
        raise InvalidParameterError(messages.N_RANGE_OVER_BUDGET, n=n, n_max=limit)
    expected = expected_count(rmap, n)

    seeds = _seeds(rmap, n, sample, divisor_points or [])
    roots = _newton_all(rmap, n, seeds, options)
    converged_seeds = len(roots)
    first_pass = roots[dedup_roots(roots, np.zeros(len(roots)), options.dedup_tolerance)]

    # orbits of periodic points are periodic points
    closure = orbit_matrix(rmap, first_pass, n).ravel() if len(first_pass) else first_pass
    candidates = _newton_all(rmap, n, closure, options) if len(closure) else closure

    g, _ = _residual(rmap, candidates, n)
    residuals = np.abs(g)
    keep = dedup_roots(candidates, residuals, options.dedup_tolerance)
    roots, residuals = candidates[keep], residuals[keep]

    if len(roots) > expected:
        logger.warning("periodic_enumeration_overcount", n=n, found=len(roots), expected=expected)
        trim = np.lexsort((np.arange(len(roots)), residuals))[:expected]
        trim.sort()
        roots, residuals = roots[trim], residuals[trim]

    _, multipliers = rmap.iterate_with_derivative(roots, n)
    periods = _primitive_periods(rmap, roots, n, options.period_tolerance)
    angles = np.angle(roots)
    order = sorted(range(len(roots)), key=lambda i: (int(periods[i]), float(angles[i]), float(abs(roots[i]))))
    points = [
        PeriodicPoint(
            z=complex(roots[i]),
            n=n,
            primitive_period=int(periods[i]),
            multiplier=complex(multipliers[i]),
            residual=float(residuals[i]),
        )
        for i in order
    ]

    kinds = [classify(p, options.classification_margin) for p in points]
    report = EnumerationReport(
        n=n,
        found=len(points),
        expected=expected,
        complete=len(points) == expected,
        unresolved_multiplicity=expected - len(points),
        repelling=kinds.count(PointKind.repelling),
        attracting=kinds.count(PointKind.attracting),
        indifferent=kinds.count(PointKind.indifferent),
        seeds=len(seeds),
        converged_seeds=converged_seeds,
    )
    if not report.complete:
        logger.warning("periodic_enumeration_incomplete", n=n, found=report.found, expected=expected)
    if report.indifferent:
        logger.warning("periodic_points_indifferent", n=n, count=report.indifferent)
    logger.info("periodic_enumeration_completed", n=n, found=report.found, expected=expected, seeds=len(seeds))
    return points, report


# ----------------------------------------------------------------------
# Classification and the (alpha, c) filter
# ----------------------------------------------------------------------


def classify(p: PeriodicPoint, margin: float = 1e-6) -> PointKind:
    modulus = p.abs_multiplier
    if modulus > 1.0 + margin:
        return PointKind.repelling
    if modulus < 1.0 - margin:
        return PointKind.attracting
    return PointKind.indifferent


def classify_repelling(p: PeriodicPoint, margin: float = 1e-6) -> bool:
    """|lambda| > 1 + margin; points within the margin of the unit circle are not repelling."""
    return classify(p, margin) == PointKind.repelling


def _window_sums(log_derivatives: np.ndarray, length: int) -> tuple[np.ndarray, np.ndarray]:
    # cumulative sums over the orbit repeated periodically up to `length` steps past each start
    n = log_derivatives.shape[1]
    reps = -(-(n + length) // n)
    tiled = np.tile(log_derivatives, (1, reps))[:, : n + length]
    cums = np.concatenate([np.zeros((tiled.shape[0], 1)), np.cumsum(tiled, axis=1)], axis=1)
    return cums, np.arange(n)


def filter_per_alpha_c(points: list[PeriodicPoint], rmap: RationalMap, params: FilterParams) -> list[PeriodicPoint]:
    """Points of Per_n(alpha, c).

    With k = qn + r and the orbit periodic, |(f^k)'(f^i z)| = |lambda|^q |(f^r)'(f^i z)|, so the
    condition for every k reduces to |lambda| >= e^{n alpha} together with the windows r < n.
    """
    if not points:
        return []
    n = points[0].n
    if any(p.n != n for p in points):
        raise InvalidParameterError("filter_per_alpha_c needs points with a common n")
    log_derivatives = orbit_log_derivatives(rmap, points)
    with np.errstate(invalid="ignore"):
        passed = log_derivatives.sum(axis=1) >= n * params.alpha
        if n > 1:
            cums, starts = _window_sums(log_derivatives, n - 1)
            log_c = math.log(params.c)
            for r in range(1, n):
                windows = cums[:, starts + r] - cums[:, starts]
                passed &= windows.min(axis=1) >= log_c + r * params.alpha
    return [p for p, ok in zip(points, passed, strict=True) if ok]


def brute_force_membership(p: PeriodicPoint, rmap: RationalMap, params: FilterParams, K: int) -> bool:
    """Check |(f^k)'(f^i z)| >= c e^{k alpha} for all 1 <= k <= K and all orbit positions i.

    Log-derivatives are taken along one period and repeated, since forward iteration of a
    repelling point leaves its orbit long before k = K.
    """
    if K < p.n:
        raise InvalidParameterError("brute_force_membership needs K >= n", K=K, n=p.n)
    log_derivatives = orbit_log_derivatives(rmap, [p])
    cums, starts = _window_sums(log_derivatives, K)
    ks = np.arange(1, K + 1)
    with np.errstate(invalid="ignore"):
        windows = cums[0][starts[None, :] + ks[:, None]] - cums[0][starts][None, :]
        thresholds = math.log(params.c) + ks * params.alpha
        return bool(np.all(windows >= thresholds[:, None]))


# ----------------------------------------------------------------------
# Catalog with divisor recursion and persistence
# ----------------------------------------------------------------------


class PeriodicCatalog:
    """Memoized enumerations for one map, seeded from divisors and backed by an optional store."""

    def __init__(
        self,
        rmap: RationalMap,
        sample: JuliaSample,
        options: SearchOptions | None = None,
        store: PeriodicStore | None = None,
    ) -> None:
        self.rmap = rmap
        self.sample = sample
        self.options = options or SearchOptions()
        self._store = store
        self._entries: dict[int, tuple[list[PeriodicPoint], EnumerationReport]] = {}

    def get(self, n: int) -> tuple[list[PeriodicPoint], EnumerationReport]:
        if n in self._entries:
            return self._entries[n]
        if self._store is not None:
            cached = self._store.load(self.rmap, n)
            if cached is not None:
                report = cached[1]
                # same warnings as a fresh enumeration, so diagnostics do not depend on the cache
                if not report.complete:
                    logger.warning("periodic_enumeration_incomplete", n=n, found=report.found, expected=report.expected)
                if report.indifferent:
                    logger.warning("periodic_points_indifferent", n=n, count=report.indifferent)
                self._entries[n] = cached
                return cached
        divisor_points: list[PeriodicPoint] = []
        for m in range(1, n):
            if n % m == 0:
                divisor_points.extend(self.get(m)[0])
        result = find_periodic(self.rmap, n, self.sample, self.options, divisor_points)
        if self._store is not None:
            self._store.save(self.rmap, n, *result)
        self._entries[n] = result
        return result

    def points(self, n: int) -> list[PeriodicPoint]:
        return self.get(n)[0]

    def report(self, n: int) -> EnumerationReport:
        return self.get(n)[1]
