from collections.abc import Callable

from app.models.RequestsCommands import CommandRequest
from app.shared.config import get_settings
from app.shared.LoggerSingleton import logger

from .error_handling import ErrorHandlingMiddleware
from .logging_middleware import LoggingMiddleware
from .metrics_middleware import MetricsMiddleware

Handler = Callable[[CommandRequest], int]


def build_command_stack(handler: Handler) -> Handler:
    """Wrap a command handler: logging innermost, then metrics, error handling outermost."""
    stack: Handler = LoggingMiddleware(handler, logger=logger)
    stack = MetricsMiddleware(stack, textfile=get_settings().metrics_textfile)
    return ErrorHandlingMiddleware(stack, logger=logger)


__all__ = [
    "ErrorHandlingMiddleware",
    "LoggingMiddleware",
    "MetricsMiddleware",
    "build_command_stack",
]
