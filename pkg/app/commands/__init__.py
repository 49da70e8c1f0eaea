"""Typer subcommands. Each module exposes `register(app)`; app.main wires them like API routers."""

from __future__ import annotations

from typing import Any

import typer

from app.middlewares import build_command_stack
from app.models.RequestsCommands import CommandRequest
from app.services.pipeline_service import execute


def dispatch(ctx: typer.Context, command: str, **extra: Any) -> None:
    """Run `command` with the global options of the callback through the middleware stack."""
    options: dict[str, Any] = dict(ctx.obj or {})
    options.update({key: value for key, value in extra.items() if value is not None})
    exit_code = build_command_stack(execute)(CommandRequest(command=command, **options))
    raise typer.Exit(code=exit_code)
