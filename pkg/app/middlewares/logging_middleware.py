from __future__ import annotations

import time
from collections.abc import Callable
from typing import TYPE_CHECKING

from app.models.RequestsCommands import CommandRequest

if TYPE_CHECKING:
    import structlog


class LoggingMiddleware:
    """Structured start/finish logging of a command with its duration."""

    def __init__(self, app: Callable[[CommandRequest], int], logger: structlog.stdlib.BoundLogger) -> None:
        self.app = app
        self._logger = logger

    def __call__(self, request: CommandRequest) -> int:
        start = time.perf_counter()
        self._logger.info(
            "command_started",
            command=request.command,
            config=str(request.config_path) if request.config_path else None,
            threads=request.threads,
        )
        try:
            exit_code = self.app(request)
        except Exception as exc:
            duration_ms = (time.perf_counter() - start) * 1000
            self._logger.info(
                "command_aborted",
                command=request.command,
                duration_ms=round(duration_ms, 2),
                error_type=exc.__class__.__name__,
            )
            raise
        duration_ms = (time.perf_counter() - start) * 1000
        self._logger.info(
            "command_completed",
            command=request.command,
            exit_code=exit_code,
            duration_ms=round(duration_ms, 2),
            out=str(request.out) if request.out else None,
        )
        return exit_code
