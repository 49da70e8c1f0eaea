from __future__ import annotations

from functools import cached_property
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.dynamics.julia import Generator
from app.dynamics.periodic import n_max
from app.dynamics.potentials import Potential, parse_potential
from app.dynamics.pressure import SeparatedPool
from app.dynamics.rational_map import Metric, RationalMap
from app.shared import messages
from app.shared.config import get_settings
from app.shared.exceptions import ConfigError


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class PotentialSpec(_Section):
    expression: str = "const(0.0)"

    @field_validator("expression")
    @classmethod
    def _parses(cls, value: str) -> str:
        try:
            parse_potential(value)
        except ConfigError as exc:
            raise ValueError(str(exc)) from exc
        return value

    @cached_property
    def potential(self) -> Potential:
        return parse_potential(self.expression)


class RunSpec(_Section):
    alpha: float = Field(default_factory=lambda: get_settings().default_alpha)
    c_schedule: list[float] = Field(default_factory=lambda: [1.0, 0.5, 0.25])
    n_range: tuple[int, int] = (1, 12)
    epsilon_schedule: list[float] = Field(default_factory=lambda: [0.1, 0.05, 0.02])
    window: int = Field(default_factory=lambda: get_settings().pressure_window)
    separated_pool: SeparatedPool = SeparatedPool.pullback
    bracket: tuple[float, float] = (0.5, 1.5)
    tol: float = 1e-3
    metric: Metric | None = None
    cross_check: bool = True
    family_c: list[float] = Field(default_factory=list)

    @field_validator("alpha")
    @classmethod
    def _alpha_positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(messages.ALPHA_NOT_POSITIVE)
        return value

    @field_validator("c_schedule")
    @classmethod
    def _c_schedule(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError(messages.C_SCHEDULE_EMPTY)
        if any(not 0 < c <= 1 for c in value):
            raise ValueError(messages.C_SCHEDULE_OUT_OF_RANGE)
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError(messages.C_SCHEDULE_NOT_DESCENDING)
        return value

    @field_validator("n_range")
    @classmethod
    def _n_range(cls, value: tuple[int, int]) -> tuple[int, int]:
        if not 1 <= value[0] <= value[1]:
            raise ValueError(messages.N_RANGE_INVALID)
        return value

    @field_validator("epsilon_schedule")
    @classmethod
    def _epsilons(cls, value: list[float]) -> list[float]:
        if not value or any(not eps > 0 for eps in value):
            raise ValueError(messages.EPSILON_NOT_POSITIVE)
        return value

    @field_validator("bracket")
    @classmethod
    def _bracket(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not value[0] < value[1]:
            raise ValueError(messages.BRACKET_INVALID)
        return value

    @field_validator("window")
    @classmethod
    def _window(cls, value: int) -> int:
        if value < 1:
            raise ValueError("window must be at least 1")
        return value

    @property
    def ns(self) -> list[int]:
        return list(range(self.n_range[0], self.n_range[1] + 1))


class SampleSpec(_Section):
    count: int = Field(default_factory=lambda: get_settings().sample_count)
    depth: int = Field(default_factory=lambda: get_settings().sample_depth)
    seed: int = Field(default_factory=lambda: get_settings().sample_seed)
    generator: Generator = Generator.inverse_iteration

    @field_validator("count")
    @classmethod
    def _count(cls, value: int) -> int:
        if value < 1:
            raise ValueError(messages.SAMPLE_COUNT_INVALID)
        return value


class OutputSpec(_Section):
    directory: Path = Field(default_factory=lambda: get_settings().output_dir)
    formats: list[str] = Field(default_factory=lambda: ["csv", "json"])

    @field_validator("formats")
    @classmethod
    def _formats(cls, value: list[str]) -> list[str]:
        cleaned = [fmt.strip().lower() for fmt in value]
        if not cleaned or any(fmt not in {"csv", "json"} for fmt in cleaned):
            raise ValueError(messages.FORMATS_INVALID)
        return cleaned


class RunConfig(BaseModel):
    """A validated run: map, potential, pressure parameters, sampling and output."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    map: RationalMap
    potential: PotentialSpec = Field(default_factory=PotentialSpec)
    run: RunSpec = Field(default_factory=RunSpec)
    sample: SampleSpec = Field(default_factory=SampleSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @model_validator(mode="before")
    @classmethod
    def _map_defaults(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("map"), dict):
            settings = get_settings()
            defaults = {"pole_tolerance": settings.pole_tolerance, "sphere": settings.sphere_handling}
            data = {**data, "map": {**defaults, **data["map"]}}
        return data

    @model_validator(mode="after")
    def _within_budget(self) -> RunConfig:
        limit = n_max(self.map, get_settings().max_periodic_points)
        if self.run.n_range[1] > limit:
            raise ValueError(f"{messages.N_RANGE_OVER_BUDGET} (n_max = {limit})")
        return self

    @property
    def metric(self) -> Metric:
        if self.run.metric is not None:
            return self.run.metric
        return Metric.euclidean if self.map.is_polynomial else Metric.chordal

    def with_overrides(self, **overrides: Any) -> RunConfig:
        """Apply CLI overrides (n_max, alpha, c_schedule, seed, out, formats) and revalidate."""
        data = self.model_dump()
        data["map"] = {
            "numerator": [[a.real, a.imag] for a in self.map.numerator],
            "denominator": [[a.real, a.imag] for a in self.map.denominator],
            "sphere": self.map.sphere,
            "pole_tolerance": self.map.pole_tolerance,
        }
        if overrides.get("n_max") is not None:
            data["run"]["n_range"] = (min(data["run"]["n_range"][0], overrides["n_max"]), overrides["n_max"])
        if overrides.get("alpha") is not None:
            data["run"]["alpha"] = overrides["alpha"]
        if overrides.get("c_schedule") is not None:
            data["run"]["c_schedule"] = overrides["c_schedule"]
        if overrides.get("seed") is not None:
            data["sample"]["seed"] = overrides["seed"]
        if overrides.get("out") is not None:
            data["output"]["directory"] = overrides["out"]
        if overrides.get("formats") is not None:
            data["output"]["formats"] = overrides["formats"]
        if overrides.get("family_c") is not None:
            data["run"]["family_c"] = overrides["family_c"]
        return RunConfig.model_validate(data)
