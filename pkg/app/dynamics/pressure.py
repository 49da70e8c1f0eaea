"""Periodic-point pressure, separated-set pressure, periodic-orbit measures and Lyapunov exponents.

All partition sums are formed in log space with `scipy.special.logsumexp`.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from enum import Enum
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from app.dynamics.julia import JuliaSample, min_potential, preimages
from app.dynamics.periodic import (
    FilterParams,
    PeriodicCatalog,
    PeriodicPoint,
    filter_per_alpha_c,
    orbit_matrix,
)
from app.dynamics.potentials import Potential, birkhoff_sums_on_orbits, evaluate_potential
from app.dynamics.rational_map import Metric, RationalMap, default_metric, embed
from app.models.Reports import (
    CSeriesPoint,
    EnumerationReport,
    PeriodicSeriesPoint,
    PressureDiagnostics,
    PressureEstimate,
    PressureMethod,
    SeparatedSeriesPoint,
)
from app.shared import messages
from app.shared.exceptions import (
    CriticalPointError,
    EmptyFilterError,
    InvalidParameterError,
    MonotonicityError,
    NumericalDiagnosticError,
    PotentialEvaluationError,
)
from app.shared.LoggerSingleton import logger
from app.shared.metrics import pressure_evaluations_total

DEFAULT_WINDOW = 4
# level size above which pullback sets are thinned
DEFAULT_MAX_POINTS = 2**20


def validate_n_range(n_range: Iterable[int]) -> list[int]:
    ns = [int(n) for n in n_range]
    if not ns or ns[0] < 1 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InvalidParameterError(messages.N_RANGE_INVALID, n_range=ns)
    return ns


# ----------------------------------------------------------------------
# Periodic-point pressure
# ----------------------------------------------------------------------


class QPTerm(BaseModel):
    """log Q_P at one level n with the counts behind it."""

    model_config = ConfigDict(frozen=True)

    n: int
    log_qp: float
    count_filtered: int
    count_total: int
    fallback_used: bool
    report: EnumerationReport

    @property
    def value(self) -> float:
        return self.log_qp / self.n


def log_q_p(
    rmap: RationalMap,
    phi: Potential,
    params: FilterParams,
    n: int,
    sample: JuliaSample,
    catalog: PeriodicCatalog | None = None,
) -> QPTerm:
    """log of the sum of exp(S_n phi) over Per_n(alpha, c), or n min_X phi when that set is empty."""
    catalog = catalog or PeriodicCatalog(rmap, sample)
    points, report = catalog.get(n)
    filtered = filter_per_alpha_c(points, rmap, params)
    pressure_evaluations_total.labels(method=PressureMethod.periodic_point.value).inc()
    if filtered:
        sums = birkhoff_sums_on_orbits(phi, rmap, orbit_matrix(rmap, np.asarray([p.z for p in filtered]), n))
        log_qp = float(logsumexp(sums))
        fallback = False
    else:
        log_qp = n * min_potential(sample, rmap, phi)
        fallback = True
        logger.warning("qp_fallback_used", n=n, alpha=params.alpha, c=params.c, sample_size=len(sample))
    if not report.complete:
        logger.warning("qp_enumeration_incomplete", n=n, found=report.found, expected=report.expected)
    return QPTerm(
        n=n,
        log_qp=log_qp,
        count_filtered=len(filtered),
        count_total=len(points),
        fallback_used=fallback,
        report=report,
    )


def q_p(
    rmap: RationalMap,
    phi: Potential,
    params: FilterParams,
    n: int,
    sample: JuliaSample,
    catalog: PeriodicCatalog | None = None,
) -> float:
    return math.exp(log_q_p(rmap, phi, params, n, sample, catalog).log_qp)


def oscillation_check(sample: JuliaSample, rmap: RationalMap, phi: Potential) -> tuple[float, bool] | None:
    """(max phi - min phi over the sample, whether it stays below log d); None if phi is not evaluable."""
    try:
        values = evaluate_potential(phi, rmap, sample.array)
    except NumericalDiagnosticError:
        return None
    if not np.all(np.isfinite(values)):
        return None
    oscillation = float(np.max(values) - np.min(values))
    return oscillation, oscillation < math.log(rmap.degree)


def p_p(
    rmap: RationalMap,
    phi: Potential,
    params: FilterParams,
    n_range: Iterable[int],
    sample: JuliaSample,
    catalog: PeriodicCatalog | None = None,
    *,
    window: int = DEFAULT_WINDOW,
) -> PressureEstimate:
    """Series (1/n) log Q_P over n_range; the value is the maximum over the last `window` entries."""
    ns = validate_n_range(n_range)
    if window < 1:
        raise InvalidParameterError("window must be at least 1", window=window)
    catalog = catalog or PeriodicCatalog(rmap, sample)
    terms = [log_q_p(rmap, phi, params, n, sample, catalog) for n in ns]
    series = [
        PeriodicSeriesPoint(
            n=t.n,
            count_filtered=t.count_filtered,
            count_total=t.count_total,
            log_qp=t.log_qp,
            value_n=t.value,
            fallback_used=t.fallback_used,
            complete=t.report.complete,
        )
        for t in terms
    ]
    value = max(point.value_n for point in series[-window:])
    slope = float(np.polyfit(ns, [t.log_qp for t in terms], 1)[0]) if len(ns) >= 2 else None
    oscillation = oscillation_check(sample, rmap, phi)
    fallback_ns = [t.n for t in terms if t.fallback_used]
    diagnostics = PressureDiagnostics(
        enumeration=[t.report for t in terms],
        fallbacks_used=len(fallback_ns),
        fallback_ns=fallback_ns,
        incomplete_ns=[t.n for t in terms if not t.report.complete],
        alpha=params.alpha,
        c=params.c,
        min_potential=next((t.log_qp / t.n for t in terms if t.fallback_used), None),
        sample_size=len(sample),
        slope=slope,
        oscillation=oscillation[0] if oscillation else None,
        low_oscillation=oscillation[1] if oscillation else None,
    )
    logger.info(
        "periodic_pressure_estimated",
        value=value,
        alpha=params.alpha,
        c=params.c,
        n_max=ns[-1],
        fallbacks=len(fallback_ns),
    )
    return PressureEstimate(
        value=value,
        series=series,
        method=PressureMethod.periodic_point,
        window=window,
        diagnostics=diagnostics,
    )


def validate_c_schedule(c_schedule: Sequence[float]) -> list[float]:
    schedule = [float(c) for c in c_schedule]
    if not schedule:
        raise InvalidParameterError(messages.C_SCHEDULE_EMPTY)
    if any(not 0 < c <= 1 for c in schedule):
        raise InvalidParameterError(messages.C_SCHEDULE_OUT_OF_RANGE, c_schedule=schedule)
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidParameterError(messages.C_SCHEDULE_NOT_DESCENDING, c_schedule=schedule)
    return schedule


def p_p_c_limit(
    rmap: RationalMap,
    phi: Potential,
    alpha: float,
    c_schedule: Sequence[float],
    n_range: Iterable[int],
    sample: JuliaSample,
    catalog: PeriodicCatalog | None = None,
    *,
    window: int = DEFAULT_WINDOW,
    stabilization_tolerance: float = 1e-4,
    monotonicity_tolerance: float = 1e-9,
) -> PressureEstimate:
    """Walk c down the schedule until P_P stabilizes; the value may not decrease as c shrinks."""
    schedule = validate_c_schedule(c_schedule)
    ns = validate_n_range(n_range)
    catalog = catalog or PeriodicCatalog(rmap, sample)
    c_series: list[CSeriesPoint] = []
    stabilized = False
    estimate: PressureEstimate | None = None
    for c in schedule:
        estimate = p_p(rmap, phi, FilterParams(alpha=alpha, c=c), ns, sample, catalog, window=window)
        if c_series:
            previous = c_series[-1].value
            if estimate.value < previous - monotonicity_tolerance:
                raise MonotonicityError(
                    "pressure decreased as c decreased; enumeration is likely incomplete",
                    c=c,
                    value=estimate.value,
                    previous=previous,
                )
            c_series.append(CSeriesPoint(c=c, value=estimate.value))
            if abs(estimate.value - previous) < stabilization_tolerance:
                stabilized = True
                break
        else:
            c_series.append(CSeriesPoint(c=c, value=estimate.value))
    assert estimate is not None
    if not stabilized:
        logger.warning("c_limit_not_stabilized", alpha=alpha, c_series=[point.value for point in c_series])
    diagnostics = estimate.diagnostics.model_copy(update={"c_series": c_series, "stabilized": stabilized})
    return estimate.model_copy(update={"diagnostics": diagnostics})


# ----------------------------------------------------------------------
# Separated-set pressure
# ----------------------------------------------------------------------


class SeparatedSetBuilder:
    """
    Greedy maximal (n, eps)-separated subsets of a fixed sample.

    Forward orbits are computed once and extended on demand. Candidates are visited by angle, then
    modulus, then input index. A KD-tree over the base embedding yields the chosen points within eps
    at step 0; only those need the full d_n comparison.
    """

    def __init__(self, rmap: RationalMap, sample: JuliaSample, metric: Metric | None = None) -> None:
        self.rmap = rmap
        self.metric = metric or default_metric(rmap)
        points = sample.array
        self.points = points[np.isfinite(points)]
        self._orbit: list[np.ndarray] = [self.points]
        self._embedded: list[np.ndarray] = [embed(self.points, self.metric)]
        self._tree = cKDTree(self._embedded[0])
        self.order = np.lexsort((np.arange(len(self.points)), np.abs(self.points), np.angle(self.points)))
        self._selections: dict[tuple[int, float], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.points)

    def _ensure(self, n: int) -> None:
        while len(self._orbit) < n:
            image, _ = self.rmap.step_unchecked(self._orbit[-1])
            self._orbit.append(image)
            self._embedded.append(embed(image, self.metric))

    def orbit_rows(self, indices: np.ndarray, n: int) -> np.ndarray:
        self._ensure(n)
        return np.stack([step[indices] for step in self._orbit[:n]], axis=1)

    def spacing_quantile(self, quantile: float) -> float:
        """Quantile of nearest-neighbour distances in the base metric."""
        if len(self.points) < 2:
            return math.inf
        distances, _ = self._tree.query(self._embedded[0], k=2)
        return float(np.quantile(distances[:, 1], quantile))

    def select(self, n: int, epsilon: float) -> np.ndarray:
        """Indices of a maximal (n, epsilon)-separated subset, in greedy order."""
        if n < 1:
            raise InvalidParameterError("separated sets need n >= 1", n=n)
        if not epsilon > 0:
            raise InvalidParameterError(messages.EPSILON_NOT_POSITIVE, epsilon=epsilon)
        key = (n, float(epsilon))
        if key in self._selections:
            return self._selections[key]
        self._ensure(n)
        stacked = np.stack(self._embedded[:n], axis=1)
        chosen_mask = np.zeros(len(self.points), dtype=bool)
        chosen: list[int] = []
        block = 1024
        with np.errstate(invalid="ignore"):
            for start in range(0, len(self.order), block):
                indices = self.order[start : start + block]
                neighbours = self._tree.query_ball_point(self._embedded[0][indices], r=epsilon)
                for idx, near in zip(indices, neighbours, strict=True):
                    if near:
                        near_arr = np.asarray(near, dtype=np.int64)
                        near_arr = near_arr[chosen_mask[near_arr]]
                        if near_arr.size:
                            d_n = np.sqrt(((stacked[near_arr] - stacked[idx]) ** 2).sum(axis=2)).max(axis=1)
                            if np.any(d_n <= epsilon):
                                continue
                    chosen_mask[idx] = True
                    chosen.append(int(idx))
        selection = np.asarray(chosen, dtype=np.int64)
        self._selections[key] = selection
        return selection

    def log_partition(self, phi: Potential, n: int, epsilon: float) -> tuple[float, int]:
        """(log sum exp(S_n phi) over the separated set, its size)."""
        chosen = self.select(n, epsilon)
        sums = birkhoff_sums_on_orbits(phi, self.rmap, self.orbit_rows(chosen, n))
        return float(logsumexp(sums)), len(chosen)


def separated_pressure(
    rmap: RationalMap,
    phi: Potential,
    sample: JuliaSample,
    n: int,
    epsilon: float,
    builder: SeparatedSetBuilder | None = None,
) -> float:
    """(1/n) log sum exp(S_n phi) over a greedy maximal (n, epsilon)-separated subset of the sample."""
    builder = builder or SeparatedSetBuilder(rmap, sample)
    log_z, _ = builder.log_partition(phi, n, epsilon)
    pressure_evaluations_total.labels(method=PressureMethod.separated_set.value).inc()
    return log_z / n


class SeparatedPool(str, Enum):
    """Where the candidates of the (n, eps)-separated sets come from."""

    sample = "sample"
    pullback = "pullback"


class _Level(NamedTuple):
    points: np.ndarray
    # index of f(point) in the previous level; None on level 1
    parents: np.ndarray | None
    log_weight: np.ndarray
    thinning: float


class PullbackSeparatedSets:
    """
    (n, eps)-separated sets grown by pulling back an eps-separated subset of the sample.

    Level 1 is the greedy maximal eps-separated subset of the sample. Level n holds the preimages
    of level n - 1, parent by parent with branches sorted by real then imaginary part; a preimage
    joins unless it lies within eps of an earlier kept sibling. Preimages of different parents are
    (n, eps)-separated because their images are (n - 1, eps)-separated. A level above `max_points`
    keeps a seeded random subset, and each kept point carries weight size / max_points.
    """

    def __init__(
        self,
        rmap: RationalMap,
        sample: JuliaSample,
        epsilon: float,
        *,
        max_points: int = DEFAULT_MAX_POINTS,
        builder: SeparatedSetBuilder | None = None,
    ) -> None:
        if not epsilon > 0:
            raise InvalidParameterError(messages.EPSILON_NOT_POSITIVE, epsilon=epsilon)
        if max_points < 1:
            raise InvalidParameterError("max_points must be at least 1", max_points=max_points)
        self.rmap = rmap
        self.epsilon = float(epsilon)
        self.max_points = max_points
        self.builder = builder or SeparatedSetBuilder(rmap, sample)
        self.metric = self.builder.metric
        self._seed = abs(int(sample.seed))
        first = self.builder.points[self.builder.select(1, self.epsilon)]
        self._levels: list[_Level] = [_Level(first, None, np.zeros(len(first)), 1.0)]

    def __len__(self) -> int:
        return len(self._levels)

    def _grow(self) -> None:
        last = self._levels[-1]
        roots = preimages(self.rmap, last.points)
        finite = np.isfinite(roots)
        embedded = embed(np.where(finite, roots, 0), self.metric)
        keep = finite.copy()
        for j in range(1, roots.shape[1]):
            for i in range(j):
                gap = np.sqrt(((embedded[:, j] - embedded[:, i]) ** 2).sum(axis=-1))
                keep[:, j] &= ~(keep[:, i] & (gap <= self.epsilon))
        parents = np.nonzero(keep)[0]
        points = roots[keep]
        log_weight = last.log_weight[parents]
        thinning = last.thinning
        if len(points) > self.max_points:
            rng = np.random.default_rng([self._seed, len(self._levels) + 1])
            chosen = np.sort(rng.choice(len(points), size=self.max_points, replace=False))
            factor = len(points) / self.max_points
            logger.debug("separated_level_thinned", n=len(self._levels) + 1, size=len(points), kept=self.max_points)
            points, parents = points[chosen], parents[chosen]
            log_weight = log_weight[chosen] + math.log(factor)
            thinning *= factor
        self._levels.append(_Level(points, parents, log_weight, thinning))

    def points(self, n: int) -> np.ndarray:
        """Points of the level-n set."""
        if n < 1:
            raise InvalidParameterError("separated sets need n >= 1", n=n)
        while len(self._levels) < n:
            self._grow()
        return self._levels[n - 1].points

    def log_partitions(self, phi: Potential, n_max: int) -> list[tuple[float, int, float]]:
        """(log Z_n, |E_n|, thinning) for n = 1..n_max; S_n phi follows the parent links."""
        self.points(n_max)
        out: list[tuple[float, int, float]] = []
        sums: np.ndarray | None = None
        for level in self._levels[:n_max]:
            try:
                values = phi.evaluate(self.rmap, level.points)
            except NumericalDiagnosticError as exc:
                raise PotentialEvaluationError("potential evaluation failed on a separated set", cause=exc.message) from exc
            sums = values if sums is None or level.parents is None else values + sums[level.parents]
            out.append((float(logsumexp(sums + level.log_weight)), len(level.points), level.thinning))
        return out


def separated_series(
    rmap: RationalMap,
    phi: Potential,
    sample: JuliaSample,
    n_range: Iterable[int],
    epsilon: float,
    builder: SeparatedSetBuilder | None = None,
    *,
    pool: SeparatedPool = SeparatedPool.pullback,
    sets: PullbackSeparatedSets | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
    saturation_ratio: float = 1 / 16,
    density_quantile: float = 0.95,
    convergence_tolerance: float = 0.01,
    window: int = DEFAULT_WINDOW,
) -> PressureEstimate:
    """Separated-set series at one epsilon.

    Each row carries (1/n) log Z_n and the increment log Z_n - log Z_{n-1}, which drops the
    epsilon-dependent prefactor. The value is the increment at the largest usable n >= 2, else
    the largest (1/n) log Z_n. With the sample pool a row is unusable once its set exceeds
    `saturation_ratio` of the sample; pullback sets never saturate. The estimate is converged
    when the last two usable increments agree within `convergence_tolerance`.
    """
    ns = validate_n_range(n_range)
    if not epsilon > 0:
        raise InvalidParameterError(messages.EPSILON_NOT_POSITIVE, epsilon=epsilon)
    builder = builder or (sets.builder if sets is not None else SeparatedSetBuilder(rmap, sample))
    spacing = builder.spacing_quantile(density_quantile)
    sparse = not spacing < epsilon / 4
    if sparse:
        logger.warning("separated_sample_sparse", epsilon=epsilon, spacing=spacing, sample_size=len(builder))

    if pool == SeparatedPool.pullback:
        sets = sets or PullbackSeparatedSets(rmap, sample, epsilon, max_points=max_points, builder=builder)
        if sets.epsilon != float(epsilon):
            raise InvalidParameterError("separated sets were built for another epsilon", epsilon=epsilon, built=sets.epsilon)
        partitions = sets.log_partitions(phi, ns[-1])
        measured = {n: partitions[n - 1] for n in ns}
    else:
        measured = {n: (*builder.log_partition(phi, n, epsilon), 1.0) for n in ns}

    rows: list[SeparatedSeriesPoint] = []
    previous: tuple[int, float] | None = None
    limit = saturation_ratio * len(builder)
    for n in ns:
        log_z, count, thinning = measured[n]
        pressure_evaluations_total.labels(method=PressureMethod.separated_set.value).inc()
        increment = log_z - previous[1] if previous is not None and previous[0] == n - 1 else None
        rows.append(
            SeparatedSeriesPoint(
                n=n,
                epsilon=epsilon,
                count=count,
                log_z=log_z,
                value_n=log_z / n,
                increment=increment,
                saturated=pool == SeparatedPool.sample and count > limit,
                lower_bound=sparse,
                thinning=thinning,
            )
        )
        previous = (n, log_z)

    usable = [row for row in rows if row.increment is not None and not row.saturated and row.n >= 2]
    increments = [row.increment for row in usable if row.increment is not None]
    value = increments[-1] if increments else max(row.value_n for row in rows)
    converged = len(increments) >= 2 and abs(increments[-1] - increments[-2]) <= convergence_tolerance
    saturated_ns = [row.n for row in rows if row.saturated]
    if saturated_ns:
        logger.warning("separated_set_saturated", epsilon=epsilon, ns=saturated_ns, limit=int(limit))
    if not converged:
        logger.warning("separated_estimate_not_converged", epsilon=epsilon, pool=pool.value, usable_ns=[row.n for row in usable])
    return PressureEstimate(
        value=value,
        series=rows,
        method=PressureMethod.separated_set,
        window=window,
        diagnostics=PressureDiagnostics(
            epsilon=epsilon,
            sample_size=len(builder),
            lower_bound=sparse,
            saturated_ns=saturated_ns,
            pool=pool.value,
            converged=converged,
        ),
    )


# ----------------------------------------------------------------------
# Periodic-orbit measures
# ----------------------------------------------------------------------


class PeriodicOrbitMeasure(BaseModel):
    """Atomic measure on a filtered set with weights proportional to exp(S_n phi)."""

    model_config = ConfigDict(frozen=True)

    points: tuple[PeriodicPoint, ...]
    weights: tuple[float, ...]
    log_normalizer: float

    @model_validator(mode="after")
    def _normalized(self) -> PeriodicOrbitMeasure:
        if len(self.points) != len(self.weights):
            raise ValueError("one weight per point")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        return self

    @property
    def n(self) -> int:
        return self.points[0].n


def orbit_measure(points: Sequence[PeriodicPoint], rmap: RationalMap, phi: Potential) -> PeriodicOrbitMeasure:
    if not points:
        raise EmptyFilterError("orbit measure needs a nonempty filtered set")
    n = points[0].n
    if any(p.n != n for p in points):
        raise InvalidParameterError("orbit measure needs points with a common n")
    sums = birkhoff_sums_on_orbits(phi, rmap, orbit_matrix(rmap, np.asarray([p.z for p in points]), n))
    log_normalizer = float(logsumexp(sums))
    weights = np.exp(sums - log_normalizer)
    weights /= math.fsum(weights)
    return PeriodicOrbitMeasure(
        points=tuple(points),
        weights=tuple(float(w) for w in weights),
        log_normalizer=log_normalizer,
    )


def measure_integral(mu: PeriodicOrbitMeasure, rmap: RationalMap, psi: Potential) -> float:
    """Sum of weight_i (1/n) S_n psi(z_i)."""
    n = mu.n
    sums = birkhoff_sums_on_orbits(psi, rmap, orbit_matrix(rmap, np.asarray([p.z for p in mu.points]), n))
    return float(np.dot(np.asarray(mu.weights), sums) / n)


def pointwise_lyapunov(p: PeriodicPoint) -> float:
    """(1/n) log|lambda| on a period-n orbit."""
    return p.log_abs_multiplier / p.n


def lyapunov_exponent(mu: PeriodicOrbitMeasure, rmap: RationalMap) -> float:
    exponents = []
    for p in mu.points:
        if p.abs_multiplier == 0:
            raise CriticalPointError("zero multiplier in the support", z=str(p.z))
        exponents.append(pointwise_lyapunov(p))
    return float(np.dot(np.asarray(mu.weights), np.asarray(exponents)))
