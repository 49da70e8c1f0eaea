from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from time import perf_counter

from app.models.RequestsCommands import CommandRequest
from app.shared.metrics import command_duration_seconds, command_runs_total, export_textfile


class MetricsMiddleware:
    """
    Records Prometheus metrics per command run.
    Labels: command, and the exit status the run will end with.
    """

    def __init__(self, app: Callable[[CommandRequest], int], textfile: Path | None = None) -> None:
        self.app = app
        self.textfile = textfile

    def __call__(self, request: CommandRequest) -> int:
        start = perf_counter()
        status = "1"
        try:
            exit_code = self.app(request)
            status = str(exit_code)
            return exit_code
        except Exception as exc:
            status = str(getattr(exc, "exit_code", 1))
            raise
        finally:
            command_runs_total.labels(command=request.command, status=status).inc()
            command_duration_seconds.labels(command=request.command).observe(perf_counter() - start)
            if self.textfile is not None:
                export_textfile(self.textfile)
