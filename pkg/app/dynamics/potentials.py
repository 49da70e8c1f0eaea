"""Potentials on the Julia set: a closed constructor algebra, Birkhoff sums and the expression parser.

Expression grammar (prefix, case-sensitive):

    expr  := number | "re" | "im" | "logderiv"
           | "const(" number ")" | "neglogderiv(" number ")"
           | "sum(" expr "," expr {"," expr} ")" | "scale(" number "," expr ")"

`logderiv` is z -> log|f'(z)| and `neglogderiv(t)` is z -> -t log|f'(z)|.
"""

from __future__ import annotations

import ast
from abc import abstractmethod
from typing import Annotated, Any, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, ValidationInfo, model_validator

from app.dynamics.rational_map import RationalMap
from app.shared.config import get_settings
from app.shared.exceptions import (
    ConfigError,
    CriticalPointError,
    InvalidParameterError,
    NumericalDiagnosticError,
    PotentialEvaluationError,
)


class _Node(BaseModel):
    model_config = ConfigDict(frozen=True)

    def depth(self) -> int:
        return 1

    @abstractmethod
    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray: ...

    def uses_derivative(self) -> bool:
        return False


def _check_depth(node: _Node, info: ValidationInfo) -> None:
    # the parser passes its limit through the validation context
    limit = (info.context or {}).get("max_depth") or get_settings().potential_max_depth
    if node.depth() > limit:
        raise ValueError(f"potential tree deeper than {limit}")


class Const(_Node):
    kind: Literal["const"] = "const"
    value: float

    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray:
        return np.full(np.shape(z), self.value, dtype=np.float64)

    def __str__(self) -> str:
        return f"const({self.value!r})"


class NegTLogAbsDeriv(_Node):
    """z -> -t log|f'(z)|."""

    kind: Literal["neg_t_log_abs_deriv"] = "neg_t_log_abs_deriv"
    t: float

    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray:
        if self.t == 0.0:
            return np.zeros(np.shape(z), dtype=np.float64)
        log_abs = np.asarray(rmap.log_abs_derivative(z), dtype=np.float64)
        critical = np.isneginf(log_abs)
        if np.any(critical):
            at = np.asarray(z).ravel()[int(np.flatnonzero(critical.ravel())[0])]
            raise CriticalPointError("log|f'| evaluated at a critical point", z=str(complex(at)))
        return -self.t * log_abs

    def uses_derivative(self) -> bool:
        return self.t != 0.0

    def __str__(self) -> str:
        return "logderiv" if self.t == -1.0 else f"neglogderiv({self.t!r})"


class CoordRe(_Node):
    kind: Literal["re"] = "re"

    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray:
        return np.real(np.asarray(z, dtype=np.complex128))

    def __str__(self) -> str:
        return "re"


class CoordIm(_Node):
    kind: Literal["im"] = "im"

    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray:
        return np.imag(np.asarray(z, dtype=np.complex128))

    def __str__(self) -> str:
        return "im"


class Sum(_Node):
    kind: Literal["sum"] = "sum"
    left: Potential
    right: Potential

    @model_validator(mode="after")
    def _bounded_depth(self, info: ValidationInfo) -> Sum:
        _check_depth(self, info)
        return self

    def depth(self) -> int:
        return 1 + max(self.left.depth(), self.right.depth())

    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray:
        return self.left.evaluate(rmap, z) + self.right.evaluate(rmap, z)

    def uses_derivative(self) -> bool:
        return self.left.uses_derivative() or self.right.uses_derivative()

    def __str__(self) -> str:
        return f"sum({self.left}, {self.right})"


class Scale(_Node):
    kind: Literal["scale"] = "scale"
    factor: float
    inner: Potential

    @model_validator(mode="after")
    def _bounded_depth(self, info: ValidationInfo) -> Scale:
        _check_depth(self, info)
        return self

    def depth(self) -> int:
        return 1 + self.inner.depth()

    def evaluate(self, rmap: RationalMap, z: np.ndarray) -> np.ndarray:
        if self.factor == 0.0:
            return np.zeros(np.shape(z), dtype=np.float64)
        return self.factor * self.inner.evaluate(rmap, z)

    def uses_derivative(self) -> bool:
        return self.factor != 0.0 and self.inner.uses_derivative()

    def __str__(self) -> str:
        return f"scale({self.factor!r}, {self.inner})"


Potential = Annotated[
    Union[Const, NegTLogAbsDeriv, CoordRe, CoordIm, Sum, Scale],
    Field(discriminator="kind"),
]

Sum.model_rebuild()
Scale.model_rebuild()

potential_adapter: TypeAdapter[Any] = TypeAdapter(Potential)


def shifted(phi: Potential, constant: float) -> Potential:
    """phi + constant."""
    return Sum(left=phi, right=Const(value=constant))


def evaluate_potential(phi: Potential, rmap: RationalMap, z: Any) -> np.ndarray:
    """Vectorized evaluation over an array of points."""
    return phi.evaluate(rmap, np.asarray(z, dtype=np.complex128))


def eval_potential(phi: Potential, rmap: RationalMap, z: complex) -> float:
    return float(evaluate_potential(phi, rmap, np.asarray([z]))[0])


def birkhoff_sum(phi: Potential, rmap: RationalMap, z: Any, n: int) -> Any:
    """S_n phi(z) = sum_{k<n} phi(f^k z) along one forward orbit per point."""
    if n < 1:
        raise InvalidParameterError("birkhoff_sum needs n >= 1", n=n)
    w = np.asarray(z, dtype=np.complex128)
    total = np.zeros(w.shape, dtype=np.float64)
    for k in range(n):
        try:
            total += phi.evaluate(rmap, w)
        except NumericalDiagnosticError as exc:
            raise PotentialEvaluationError(f"potential evaluation failed at step {k}", k=k, cause=exc.message) from exc
        if k < n - 1:
            w = np.asarray(rmap.evaluate(w), dtype=np.complex128)
    if np.ndim(z) == 0:
        return float(total)
    return total


def birkhoff_sums_on_orbits(phi: Potential, rmap: RationalMap, orbits: np.ndarray) -> np.ndarray:
    """Row sums of phi over precomputed orbit rows of shape (m, n)."""
    if orbits.size == 0:
        return np.zeros(orbits.shape[0], dtype=np.float64)
    try:
        values = phi.evaluate(rmap, orbits)
    except NumericalDiagnosticError as exc:
        raise PotentialEvaluationError("potential evaluation failed on a periodic orbit", cause=exc.message) from exc
    return values.sum(axis=1)


# ----------------------------------------------------------------------
# Expression parser
# ----------------------------------------------------------------------

_LEAVES = {"re": CoordRe, "im": CoordIm}


def _number(node: ast.expr, text: str) -> float:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub | ast.UAdd):
        inner = _number(node.operand, text)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.Constant) and isinstance(node.value, int | float) and not isinstance(node.value, bool):
        return float(node.value)
    raise ConfigError(f"expected a number, got {ast.get_source_segment(text, node)!r}", column=node.col_offset + 1)


def _build(node: ast.expr, text: str, max_depth: int) -> Potential:
    column = node.col_offset + 1
    if isinstance(node, ast.Name):
        if node.id in _LEAVES:
            return _LEAVES[node.id]()
        if node.id == "logderiv":
            return NegTLogAbsDeriv(t=-1.0)
        raise ConfigError(f"unknown potential {node.id!r}", column=column)
    if isinstance(node, ast.Constant | ast.UnaryOp):
        return Const(value=_number(node, text))
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ConfigError("potential must be a prefix expression", column=column)
    if node.keywords:
        raise ConfigError("potential constructors take no keyword arguments", column=column)
    name, args = node.func.id, node.args
    if name == "const" and len(args) == 1:
        return Const(value=_number(args[0], text))
    if name == "neglogderiv" and len(args) == 1:
        return NegTLogAbsDeriv(t=_number(args[0], text))
    if name == "scale" and len(args) == 2:
        inner = _build(args[1], text, max_depth)
        return Scale.model_validate({"factor": _number(args[0], text), "inner": inner}, context={"max_depth": max_depth})
    if name == "sum" and len(args) >= 2:
        result = _build(args[0], text, max_depth)
        for arg in args[1:]:
            right = _build(arg, text, max_depth)
            result = Sum.model_validate({"left": result, "right": right}, context={"max_depth": max_depth})
        return result
    raise ConfigError(f"bad call to {name!r} with {len(args)} argument(s)", column=column)


def parse_potential(text: str, *, max_depth: int | None = None) -> Potential:
    """Parse a prefix potential expression such as `sum(scale(-0.5, logderiv), const(0.1))`.

    Trees deeper than `max_depth` (default: the potential_max_depth setting) are rejected.
    """
    max_depth = max_depth or get_settings().potential_max_depth
    source = text.strip()
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"potential syntax error: {exc.msg}", column=exc.offset) from exc
    try:
        phi = _build(tree.body, source, max_depth)
    except ValidationError as exc:
        raise ConfigError(exc.errors()[0]["msg"]) from exc
    except RecursionError as exc:
        raise ConfigError(f"potential tree deeper than {max_depth}") from exc
    if phi.depth() > max_depth:
        raise ConfigError(f"potential tree deeper than {max_depth}")
    return phi
