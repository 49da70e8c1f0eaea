"""Exception hierarchy shared by the numerical core, the repositories and the CLI.

`ConfigError` maps to exit status 2 and `NumericalDiagnosticError` to exit status 1.
"""

from __future__ import annotations

from typing import Any


class JuliaPressureError(Exception):
    """Base class; `context` is forwarded to structured logs and diagnostics."""

    exit_code = 1

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        return {"type": self.__class__.__name__, "message": self.message, **self.context}


class ConfigError(JuliaPressureError):
    exit_code = 2

    def __init__(self, message: str, *, line: int | None = None, column: int | None = None, **context: Any) -> None:
        super().__init__(message, line=line, column=column, **context)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        if self.line is None:
            return self.message if self.column is None else f"column {self.column}: {self.message}"
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class InvalidParameterError(JuliaPressureError, ValueError):
    """A precondition of an operation is violated by its arguments."""


class NumericalDiagnosticError(JuliaPressureError):
    exit_code = 1


class DegenerateMapError(NumericalDiagnosticError):
    """Both numerator and denominator vanish: the map is numerically degenerate here."""


class PoleError(NumericalDiagnosticError):
    pass


class EscapeError(NumericalDiagnosticError):
    pass


class RootFindingError(NumericalDiagnosticError):
    pass


class UnsupportedMapError(NumericalDiagnosticError):
    pass


class CriticalPointError(NumericalDiagnosticError):
    pass


class PotentialEvaluationError(NumericalDiagnosticError):
    pass


class NonHyperbolicError(NumericalDiagnosticError):
    pass


class EmptyFilterError(NumericalDiagnosticError):
    pass


class BracketError(NumericalDiagnosticError):
    pass


class MonotonicityError(NumericalDiagnosticError):
    pass


class FallbackContaminationError(NumericalDiagnosticError):
    pass


class CacheError(NumericalDiagnosticError):
    pass


class StaleCacheError(CacheError):
    """The cache record was written for a different map."""
