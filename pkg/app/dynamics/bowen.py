"""Bowen's equation P(-t log|f'|) = 0 solved with scipy bisection on the finite-n periodic-point pressure."""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence

from scipy import optimize

from app.dynamics.julia import JuliaSample, inverse_iteration_sample
from app.dynamics.periodic import FilterParams, PeriodicCatalog, PeriodicStore, SearchOptions
from app.dynamics.potentials import NegTLogAbsDeriv
from app.dynamics.pressure import (
    PullbackSeparatedSets,
    SeparatedPool,
    SeparatedSetBuilder,
    log_q_p,
    separated_series,
    validate_n_range,
)
from app.dynamics.rational_map import RationalMap
from app.models.Reports import BowenEvaluation, BowenResult, SweepResult, SweepRow
from app.shared import messages
from app.shared.exceptions import (
    BracketError,
    FallbackContaminationError,
    InvalidParameterError,
    MonotonicityError,
    NumericalDiagnosticError,
)
from app.shared.LoggerSingleton import logger

MONOTONICITY_TOLERANCE = 1e-9


def _solve(
    pressure: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float,
) -> tuple[float, tuple[float, float], list[BowenEvaluation]]:
    """Bisect a decreasing pressure curve with scipy; every evaluation is kept and checked for monotonicity."""
    evaluations: dict[float, float] = {}

    def evaluate(t: float) -> float:
        t = float(t)
        if t not in evaluations:
            evaluations[t] = pressure(t)
            ordered = sorted(evaluations.items())
            for (t_a, v_a), (t_b, v_b) in zip(ordered, ordered[1:]):
                if not v_b < v_a + MONOTONICITY_TOLERANCE:
                    raise MonotonicityError("pressure is not decreasing in t", t_a=t_a, t_b=t_b, v_a=v_a, v_b=v_b)
        return evaluations[t]

    t_lo, t_hi = bracket
    p_lo, p_hi = evaluate(t_lo), evaluate(t_hi)
    if not p_lo > 0 > p_hi:
        raise BracketError("pressure has the same sign at both bracket ends", t_lo=t_lo, t_hi=t_hi, p_lo=p_lo, p_hi=p_hi)
    t_star, outcome = optimize.bisect(evaluate, t_lo, t_hi, xtol=tol, full_output=True, disp=False)
    if not outcome.converged:
        raise NumericalDiagnosticError("bisection did not converge", iterations=outcome.iterations, flag=outcome.flag)
    t_star = float(t_star)
    evaluate(t_star)
    # tightest sign change among the evaluated points
    final_lo = max(t for t, v in evaluations.items() if v > 0)
    final_hi = min(t for t, v in evaluations.items() if v <= 0)
    return t_star, (final_lo, final_hi), [BowenEvaluation(t=t, value=v) for t, v in sorted(evaluations.items())]


def _max_slope(evaluations: Sequence[BowenEvaluation]) -> float:
    slopes = [abs((b.value - a.value) / (b.t - a.t)) for a, b in zip(evaluations, evaluations[1:]) if b.t > a.t]
    return max(slopes, default=0.0)


def bowen_root(
    rmap: RationalMap,
    params: FilterParams,
    n_range: Iterable[int],
    sample: JuliaSample,
    bracket: tuple[float, float] = (0.5, 1.5),
    tol: float = 1e-3,
    catalog: PeriodicCatalog | None = None,
    *,
    cross_check: bool = False,
    epsilon: float = 0.02,
    builder: SeparatedSetBuilder | None = None,
    pool: SeparatedPool = SeparatedPool.pullback,
    sets: PullbackSeparatedSets | None = None,
) -> BowenResult:
    """Root t* of t -> (1/n) log Q_P(-t log|f'|, alpha, c, n) at a fixed n.

    n is the largest value of n_range whose enumeration is complete. Evaluations that fall back to
    the sample minimum abort the solve, since the fallback breaks monotonicity in t. The cross-check
    solves the same equation on the separated-set estimate over n_range at `epsilon`.
    """
    t_lo, t_hi = bracket
    if not t_lo < t_hi:
        raise InvalidParameterError(messages.BRACKET_INVALID, bracket=bracket)
    if not tol > 0:
        raise InvalidParameterError("tol must be positive", tol=tol)
    ns = validate_n_range(n_range)
    catalog = catalog or PeriodicCatalog(rmap, sample)

    complete_ns = [n for n in ns if catalog.report(n).complete]
    n_used = complete_ns[-1] if complete_ns else ns[-1]
    if not complete_ns:
        logger.warning("bowen_no_complete_enumeration", n_used=n_used)

    def pressure(t: float) -> float:
        term = log_q_p(rmap, NegTLogAbsDeriv(t=t), params, n_used, sample, catalog)
        if term.fallback_used:
            raise FallbackContaminationError("empty filtered set inside the bracket", t=t, n=n_used)
        return term.value

    t_star, final_bracket, evaluations = _solve(pressure, (t_lo, t_hi), tol)
    residual = next(e.value for e in evaluations if e.t == t_star)

    separated_root: float | None = None
    if cross_check:
        builder = builder or (sets.builder if sets is not None else SeparatedSetBuilder(rmap, sample))
        if pool == SeparatedPool.pullback and sets is None:
            sets = PullbackSeparatedSets(rmap, sample, epsilon, builder=builder)

        def separated(t: float) -> float:
            estimate = separated_series(rmap, NegTLogAbsDeriv(t=t), sample, ns, epsilon, builder, pool=pool, sets=sets)
            return estimate.value

        try:
            separated_root, _, _ = _solve(separated, (t_lo, t_hi), tol)
        except (BracketError, MonotonicityError) as exc:
            logger.warning("bowen_cross_check_failed", error=exc.message, **exc.context)

    logger.info("bowen_root_found", t_star=t_star, n_used=n_used, residual=residual, cross_check=separated_root)
    return BowenResult(
        t_star=t_star,
        bracket=final_bracket,
        residual=residual,
        n_used=n_used,
        method_cross_check=separated_root,
        initial_bracket=(t_lo, t_hi),
        tol=tol,
        max_slope=_max_slope(evaluations),
        evaluations=evaluations,
        complete=bool(complete_ns),
    )


def quadratic_family_sweep(
    c_values: Sequence[float],
    params: FilterParams,
    n_range: Iterable[int],
    *,
    bracket: tuple[float, float] = (0.5, 1.5),
    tol: float = 1e-3,
    sample_count: int = 20_000,
    sample_depth: int = 64,
    seed: int = 0,
    options: SearchOptions | None = None,
    store: PeriodicStore | None = None,
) -> SweepResult:
    """Bowen roots across z^2 + c with the empirical Lipschitz constant of c -> t*(c)."""
    ns = validate_n_range(n_range)
    rows: list[SweepRow] = []
    for c in sorted(float(value) for value in c_values):
        rmap = RationalMap.quadratic(c)
        sample = inverse_iteration_sample(rmap, sample_count, sample_depth, seed)
        catalog = PeriodicCatalog(rmap, sample, options, store)
        result = bowen_root(rmap, params, ns, sample, bracket, tol, catalog)
        rows.append(SweepRow(c=c, t_star=result.t_star, residual=result.residual, n_used=result.n_used))
    lipschitz = max(
        (abs(b.t_star - a.t_star) / (b.c - a.c) for a, b in zip(rows, rows[1:]) if b.c > a.c),
        default=0.0,
    )
    logger.info("quadratic_family_swept", points=len(rows), lipschitz=lipschitz)
    return SweepResult(rows=rows, lipschitz=lipschitz)
