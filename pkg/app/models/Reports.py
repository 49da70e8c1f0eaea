from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

BOWEN_LABEL = "Bowen root (dimension estimate under hyperbolicity)"


class _Report(BaseModel):
    model_config = ConfigDict(frozen=True)


class EnumerationReport(_Report):
    n: int
    found: int
    expected: int
    complete: bool
    unresolved_multiplicity: int = 0
    repelling: int = 0
    attracting: int = 0
    indifferent: int = 0
    seeds: int = 0
    converged_seeds: int = 0

    @model_validator(mode="after")
    def _found_within_expected(self) -> EnumerationReport:
        if self.found > self.expected:
            raise ValueError("found must not exceed expected")
        return self


class PressureMethod(str, Enum):
    periodic_point = "periodic-point"
    separated_set = "separated-set"


class PeriodicSeriesPoint(_Report):
    """One row of the periodic-point series: (1/n) log Q_P at level n."""

    n: int
    count_filtered: int
    count_total: int
    log_qp: float
    value_n: float
    fallback_used: bool
    complete: bool = True


class SeparatedSeriesPoint(_Report):
    """One row of the separated-set series at (n, epsilon)."""

    n: int
    epsilon: float
    count: int
    log_z: float
    value_n: float
    increment: float | None = None
    saturated: bool = False
    lower_bound: bool = False
    # number of candidate points each kept point stands for
    thinning: float = 1.0


class CSeriesPoint(_Report):
    c: float
    value: float


class PressureDiagnostics(_Report):
    enumeration: list[EnumerationReport] = Field(default_factory=list)
    fallbacks_used: int = 0
    fallback_ns: list[int] = Field(default_factory=list)
    incomplete_ns: list[int] = Field(default_factory=list)
    alpha: float | None = None
    c: float | None = None
    epsilon: float | None = None
    min_potential: float | None = None
    sample_size: int | None = None
    slope: float | None = None
    c_series: list[CSeriesPoint] = Field(default_factory=list)
    stabilized: bool | None = None
    lower_bound: bool = False
    saturated_ns: list[int] = Field(default_factory=list)
    oscillation: float | None = None
    low_oscillation: bool | None = None
    pool: str | None = None
    converged: bool | None = None


class PressureEstimate(_Report):
    value: float
    series: list[PeriodicSeriesPoint] | list[SeparatedSeriesPoint]
    method: PressureMethod
    window: int
    diagnostics: PressureDiagnostics = Field(default_factory=PressureDiagnostics)

    @model_validator(mode="after")
    def _limsup_proxy(self) -> PressureEstimate:
        if not self.series:
            raise ValueError("series must not be empty")
        if self.method == PressureMethod.periodic_point:
            tail = [point.value_n for point in self.series[-self.window :]]
            if self.value != max(tail):
                raise ValueError("value must be the maximum over the tail window")
        return self

    @property
    def values(self) -> list[float]:
        return [point.value_n for point in self.series]


class BowenEvaluation(_Report):
    t: float
    value: float


class BowenResult(_Report):
    t_star: float
    bracket: tuple[float, float]
    residual: float
    n_used: int
    method_cross_check: float | None = None
    initial_bracket: tuple[float, float]
    tol: float
    max_slope: float
    evaluations: list[BowenEvaluation] = Field(default_factory=list)
    complete: bool = True
    label: str = BOWEN_LABEL

    @model_validator(mode="after")
    def _root_inside_bracket(self) -> BowenResult:
        t_lo, t_hi = self.bracket
        if not t_lo <= self.t_star <= t_hi:
            raise ValueError("t_star must lie inside the final bracket")
        return self


class SweepRow(_Report):
    c: float
    t_star: float
    residual: float
    n_used: int


class SweepResult(_Report):
    rows: list[SweepRow]
    lipschitz: float


class CompareRow(_Report):
    """Per-n comparison; `gap` is value_pp - value_sep at the same n, `difference_to_estimate` is
    value_pp against the final separated-set value."""

    n: int
    value_pp: float
    value_sep: float
    increment_sep: float | None
    gap: float
    difference_to_estimate: float
    lemma_ha_ok: bool


class CacheEntry(_Report):
    re: float
    im: float
    mult_re: float
    mult_im: float
    primitive_period: int
    residual: float

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @property
    def multiplier(self) -> complex:
        return complex(self.mult_re, self.mult_im)


class CacheRecord(_Report):
    fingerprint: str
    n: int
    entries: tuple[CacheEntry, ...]
    report: EnumerationReport
    version: int = 1
