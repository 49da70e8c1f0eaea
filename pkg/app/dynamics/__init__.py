# Numerical core: rational maps, Julia samples, periodic orbits, potentials, pressure and Bowen roots.
from app.dynamics.bowen import bowen_root, quadratic_family_sweep
from app.dynamics.julia import (
    Generator,
    JuliaSample,
    boundary_scan_sample,
    escape_classify,
    inverse_iteration_sample,
    min_potential,
)
from app.dynamics.periodic import (
    FilterParams,
    PeriodicCatalog,
    PeriodicPoint,
    PointKind,
    SearchOptions,
    brute_force_membership,
    classify,
    classify_repelling,
    filter_per_alpha_c,
    find_periodic,
)
from app.dynamics.potentials import (
    Const,
    CoordIm,
    CoordRe,
    NegTLogAbsDeriv,
    Potential,
    Scale,
    Sum,
    birkhoff_sum,
    eval_potential,
    parse_potential,
)
from app.dynamics.pressure import (
    PeriodicOrbitMeasure,
    SeparatedSetBuilder,
    log_q_p,
    lyapunov_exponent,
    measure_integral,
    orbit_measure,
    p_p,
    p_p_c_limit,
    pointwise_lyapunov,
    q_p,
    separated_pressure,
    separated_series,
)
from app.dynamics.rational_map import (
    INFINITY,
    Metric,
    OrbitSegment,
    RationalMap,
    deriv,
    evaluate,
    iterate,
    orbit_derivative,
    spherical_dist,
)

__all__ = [
    "INFINITY",
    "Const",
    "CoordIm",
    "CoordRe",
    "FilterParams",
    "Generator",
    "JuliaSample",
    "Metric",
    "NegTLogAbsDeriv",
    "OrbitSegment",
    "PeriodicCatalog",
    "PeriodicOrbitMeasure",
    "PeriodicPoint",
    "PointKind",
    "Potential",
    "RationalMap",
    "Scale",
    "SearchOptions",
    "SeparatedSetBuilder",
    "Sum",
    "birkhoff_sum",
    "boundary_scan_sample",
    "bowen_root",
    "brute_force_membership",
    "classify",
    "classify_repelling",
    "deriv",
    "escape_classify",
    "eval_potential",
    "evaluate",
    "filter_per_alpha_c",
    "find_periodic",
    "inverse_iteration_sample",
    "iterate",
    "log_q_p",
    "lyapunov_exponent",
    "measure_integral",
    "min_potential",
    "orbit_derivative",
    "orbit_measure",
    "p_p",
    "p_p_c_limit",
    "parse_potential",
    "pointwise_lyapunov",
    "q_p",
    "quadratic_family_sweep",
    "separated_pressure",
    "separated_series",
    "spherical_dist",
]
