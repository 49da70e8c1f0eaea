"""TOML run-configuration loader with positioned error messages."""

from __future__ import annotations

import re
import tomllib
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from app.models.RunConfig import RunConfig
from app.shared import messages
from app.shared.exceptions import ConfigError

_POSITION = re.compile(r"\(at line (\d+), column (\d+)\)")
_SECTION = re.compile(r"^\s*\[([^\]]+)\]\s*(#.*)?$")


def _locate(text: str, loc: tuple[Any, ...]) -> int | None:
    """1-based line of the key named by a pydantic location, or of its section header."""
    if not loc:
        return None
    section = str(loc[0])
    key = str(loc[1]) if len(loc) > 1 and isinstance(loc[1], str) else None
    current: str | None = None
    header_line: int | None = None
    key_pattern = re.compile(rf"^\s*{re.escape(key)}\s*=") if key else None
    for number, line in enumerate(text.splitlines(), start=1):
        match = _SECTION.match(line)
        if match:
            current = match.group(1).strip()
            if current == section and header_line is None:
                header_line = number
            continue
        if current == section and key_pattern is not None and key_pattern.match(line):
            return number
    return header_line


def _clean(message: str) -> str:
    return message.removeprefix("Value error, ").removeprefix("Assertion failed, ")


def _positioned(text: str, error: dict[str, Any]) -> tuple[str, int | None]:
    loc = tuple(error.get("loc", ()))
    message = _clean(error.get("msg", "invalid value"))
    if not loc and messages.N_RANGE_OVER_BUDGET in message:
        loc = ("run", "n_range")
    path = ".".join(str(part) for part in loc if isinstance(part, str))
    return (f"{path}: {message}" if path else message), _locate(text, loc)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        column = getattr(exc, "colno", None)
        match = _POSITION.search(str(exc))
        if line is None and match:
            line, column = int(match.group(1)), int(match.group(2))
        reason = _POSITION.sub("", str(exc)).strip()
        raise ConfigError(f"syntax error: {reason}", line=line, column=column) from exc
    if "map" not in data:
        raise ConfigError("missing [map] section", line=1)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        located = [_positioned(text, err) for err in exc.errors(include_url=False)]
        first_message, first_line = located[0]
        raise ConfigError(
            first_message,
            line=first_line,
            errors=[{"message": msg, "line": line} for msg, line in located],
        ) from exc


def apply_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """Command-line overrides on top of a loaded config; errors name the field but no line."""
    try:
        return config.with_overrides(**overrides)
    except ValidationError as exc:
        located = [_positioned("", err) for err in exc.errors(include_url=False)]
        raise ConfigError(located[0][0], errors=[{"message": msg, "line": None} for msg, _ in located]) from exc


def load_config(path: Path) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config(text)
