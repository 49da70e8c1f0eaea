"""Structured logging configuration using structlog with Rich console output and JSON file output."""

import contextlib
import logging
import os
from collections.abc import Iterator
from contextvars import ContextVar
from datetime import datetime
from typing import Any

import structlog
from structlog.typing import EventDict
from rich.console import Console
from rich.logging import RichHandler

from app.shared.config import get_settings

# Warning-level events of the current run, mirrored into diagnostics.json
_collected_warnings: ContextVar[list[dict[str, Any]] | None] = ContextVar("collected_warnings", default=None)

_MIRRORED_LEVELS = {"warning", "error", "critical", "exception"}
# Keys that would make the mirrored events differ between identical runs
_VOLATILE_KEYS = {"timestamp", "_record", "_from_structlog", "exc_info", "stack_info", "exception"}


def mirror_warnings(logger: Any, method_name: str, event_dict: EventDict) -> EventDict:
    """Copy warning-or-worse events into the active collector, if any."""
    bucket = _collected_warnings.get()
    if bucket is not None and method_name in _MIRRORED_LEVELS:
        bucket.append({k: _plain(v) for k, v in event_dict.items() if k not in _VOLATILE_KEYS})
    return event_dict


def _plain(value: Any) -> Any:
    if isinstance(value, bool | int | str) or value is None:
        return value
    if isinstance(value, float):
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


@contextlib.contextmanager
def collect_warnings() -> Iterator[list[dict[str, Any]]]:
    """Collect warning events logged inside the block."""
    bucket: list[dict[str, Any]] = []
    token = _collected_warnings.set(bucket)
    try:
        yield bucket
    finally:
        _collected_warnings.reset(token)


def setup_structlog() -> structlog.stdlib.BoundLogger:
    """Configure structlog with Rich console output and JSON file output.

    Returns:
        Configured structlog logger instance
    """
    settings = get_settings()
    level = getattr(logging, settings.log_level.upper(), logging.INFO)

    # Configure standard logging
    logging.basicConfig(
        format="%(message)s",
        level=level,
        handlers=[],  # We'll add handlers manually
    )

    # Console output with Rich (colorized, human-readable)
    console = Console(stderr=True)
    rich_handler = RichHandler(
        console=console,
        rich_tracebacks=True,
        tracebacks_show_locals=False,
        markup=False,
        show_time=True,
        show_level=True,
        show_path=False,
    )
    rich_handler.setLevel(level)

    handlers: list[logging.Handler] = [rich_handler]

    # File output with JSON (structured, machine-readable)
    file_handler: logging.FileHandler | None = None
    log_filename = None
    if settings.log_to_file:
        try:
            settings.log_dir.mkdir(parents=True, exist_ok=True)
            log_filename = settings.log_dir / f"{datetime.now().strftime('%Y-%m-%d')}.log"
            file_handler = logging.FileHandler(log_filename, encoding="utf-8")
            file_handler.setLevel(level)
            handlers.append(file_handler)
        except OSError:
            # Read-only working directories still get console logs
            file_handler = None

    root_logger = logging.getLogger()
    root_logger.handlers = []  # Clear existing handlers
    for handler in handlers:
        root_logger.addHandler(handler)
    root_logger.setLevel(level)

    # Configure structlog processors
    shared_processors = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]

    structlog.configure(
        processors=shared_processors
        + [
            mirror_warnings,
            # Prepare event dict for `ProcessorFormatter`
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    formatter_processors = [
        # Remove _record & _from_structlog from event_dict
        structlog.stdlib.ProcessorFormatter.remove_processors_meta,
    ]

    # Rich console formatter (human-readable)
    console_formatter = structlog.stdlib.ProcessorFormatter(
        foreign_pre_chain=shared_processors,
        processors=formatter_processors
        + [
            structlog.dev.ConsoleRenderer(
                colors=True,
                exception_formatter=structlog.dev.RichTracebackFormatter(),
            ),
        ],
    )
    rich_handler.setFormatter(console_formatter)

    if file_handler is not None:
        # JSON file formatter (machine-readable)
        file_formatter = structlog.stdlib.ProcessorFormatter(
            foreign_pre_chain=shared_processors,
            processors=formatter_processors + [structlog.processors.JSONRenderer()],
        )
        file_handler.setFormatter(file_formatter)

    logger = structlog.get_logger(settings.app_name)

    logger.debug(
        "logger_initialized",
        app_name=settings.app_name,
        log_file=str(log_filename) if log_filename else None,
        environment=os.getenv("APP_ENV", "develop"),
    )

    return logger


# Singleton instance
_logger_instance: structlog.stdlib.BoundLogger | None = None


def get_logger() -> structlog.stdlib.BoundLogger:
    """Get or create the singleton logger instance.

    Returns:
        Configured structlog logger
    """
    global _logger_instance
    if _logger_instance is None:
        _logger_instance = setup_structlog()
    return _logger_instance


logger = get_logger()
