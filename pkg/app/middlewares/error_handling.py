from __future__ import annotations

from collections.abc import Callable
from typing import TYPE_CHECKING, Any

from app.models.RequestsCommands import CommandRequest
from app.shared.artifacts import write_json
from app.shared.config import get_settings
from app.shared.exceptions import ConfigError, JuliaPressureError
from app.shared.LoggerSingleton import collect_warnings

if TYPE_CHECKING:
    import structlog

DIAGNOSTICS_FILE = "diagnostics.json"


class ErrorHandlingMiddleware:
    """
    Turns exceptions into exit codes and writes diagnostics.json for every run.

    Warning events logged during the command are collected into the diagnostics file together with
    the error, if any. Unexpected exceptions only expose their type and message in debug mode.
    """

    def __init__(self, app: Callable[[CommandRequest], int], logger: structlog.stdlib.BoundLogger) -> None:
        self.app = app
        self._logger = logger
        self._settings = get_settings()

    def __call__(self, request: CommandRequest) -> int:
        error: dict[str, Any] | None = None
        with collect_warnings() as warnings:
            try:
                exit_code = self.app(request)
            except ConfigError as exc:
                self._logger.error("config_error", command=request.command, error=str(exc))
                exit_code, error = exc.exit_code, {**exc.to_dict(), "message": str(exc)}
            except JuliaPressureError as exc:
                self._logger.exception("numerical_diagnostic_failure", command=request.command, error=exc.message)
                exit_code, error = exc.exit_code, exc.to_dict()
            except Exception as exc:  # noqa: BLE001
                self._logger.exception("unhandled_exception", command=request.command)
                exit_code = 1
                if self._settings.debug:
                    error = {"type": exc.__class__.__name__, "message": str(exc)}
                else:
                    error = {"type": "InternalError", "message": "internal error"}
            events = list(warnings)
        self._write_diagnostics(request, exit_code, events, error)
        return exit_code

    def _write_diagnostics(
        self,
        request: CommandRequest,
        exit_code: int,
        events: list[dict[str, Any]],
        error: dict[str, Any] | None,
    ) -> None:
        payload = {"command": request.command, "exit_code": exit_code, "warnings": events, "error": error}
        # without --out or a loaded config the settings output directory applies
        path = (request.out or get_settings().output_dir) / DIAGNOSTICS_FILE
        try:
            write_json(path, payload)
        except OSError as exc:
            self._logger.error("diagnostics_not_written", path=str(path), error=exc.strerror)
