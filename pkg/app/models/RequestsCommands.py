from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict

from app.shared.exceptions import ConfigError


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _floats(text: str, option: str) -> list[float]:
    try:
        values = [float(part) for part in _split(text)]
    except ValueError as exc:
        raise ConfigError(f"{option} must be a comma-separated list of numbers, got {text!r}") from exc
    if not values:
        raise ConfigError(f"{option} must not be empty")
    return values


class CommandRequest(BaseModel):
    """
    One CLI invocation as seen by the command middlewares.

    List options stay as the raw comma-separated text until `overrides()` parses them, so that a
    malformed value surfaces as a ConfigError inside the middleware stack. `out` is filled in by the
    handler once the run configuration is known.
    """

    model_config = ConfigDict(validate_assignment=True)

    command: str
    config_path: Path | None = None
    out: Path | None = None
    n_max: int | None = None
    alpha: float | None = None
    c_schedule: str | None = None
    seed: int | None = None
    threads: int | None = None
    formats: str | None = None
    family_c: str | None = None

    def overrides(self) -> dict[str, Any]:
        return {
            "n_max": self.n_max,
            "alpha": self.alpha,
            "c_schedule": _floats(self.c_schedule, "--c-schedule") if self.c_schedule is not None else None,
            "seed": self.seed,
            "out": self.out,
            "formats": _split(self.formats) if self.formats is not None else None,
            "family_c": _floats(self.family_c, "--family-c") if self.family_c is not None else None,
        }
