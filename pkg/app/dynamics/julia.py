"""Finite samples of the Julia set: inverse iteration, boundary scans and escape tests."""

from __future__ import annotations

import math
from enum import Enum
from functools import cached_property
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import BaseModel, ConfigDict

from app.dynamics.rational_map import RationalMap
from app.dynamics.roots import aberth_roots
from app.shared import messages
from app.shared.exceptions import (
    CriticalPointError,
    InvalidParameterError,
    NonHyperbolicError,
    PoleError,
    UnsupportedMapError,
)
from app.shared.LoggerSingleton import logger
from app.tasks.pool import map_chunks

if TYPE_CHECKING:
    from app.dynamics.potentials import Potential

REPELLING_MARGIN = 1e-6
PREIMAGE_CHUNK = 2**16


class Generator(str, Enum):
    inverse_iteration = "inverse-iteration"
    boundary_scan = "boundary-scan"


class JuliaSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: tuple[complex, ...]
    generator: Generator
    seed: int
    count: int
    depth: int = 0

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.points)


class EscapeClassification(NamedTuple):
    escaped: bool
    step: int | None = None

    def __str__(self) -> str:
        return f"escaped({self.step})" if self.escaped else "bounded"


def _require_polynomial(rmap: RationalMap) -> None:
    if not rmap.is_polynomial:
        raise InvalidParameterError("escape tests need a polynomial map")


def escape_times(rmap: RationalMap, z: np.ndarray, max_iter: int) -> np.ndarray:
    """First step t with |f^t(z)| > R for each point, or -1 when bounded for max_iter steps."""
    _require_polynomial(rmap)
    radius = rmap.escape_radius
    w = np.array(z, dtype=np.complex128, copy=True).ravel()
    steps = np.full(w.shape, -1, dtype=np.int64)
    steps[np.abs(w) > radius] = 0
    active = steps < 0
    with np.errstate(all="ignore"):
        for t in range(1, max_iter + 1):
            if not np.any(active):
                break
            w[active] = npoly.polyval(w[active], rmap.num_coeffs)
            escaped = active & ~(np.abs(w) <= radius)
            steps[escaped] = t
            active &= ~escaped
    return steps.reshape(np.shape(z))


def escape_classify(rmap: RationalMap, z: complex, max_iter: int) -> EscapeClassification:
    step = int(escape_times(rmap, np.asarray([z]), max_iter)[0])
    if step < 0:
        return EscapeClassification(escaped=False)
    return EscapeClassification(escaped=True, step=step)


def repelling_fixed_point(rmap: RationalMap) -> complex:
    """The fixed point with the largest |f'| > 1, or UnsupportedMapError."""
    width = rmap.degree + 1
    num = np.zeros(width, dtype=np.complex128)
    num[: len(rmap.numerator)] = rmap.numerator
    zden = np.zeros(width + 1, dtype=np.complex128)
    zden[1 : len(rmap.denominator) + 1] = rmap.denominator
    g = npoly.polysub(np.pad(num, (0, 1)), zden)
    g = np.trim_zeros(g, "b")
    candidates: list[tuple[float, complex]] = []
    roots = aberth_roots(g) if len(g) > 1 else np.empty(0, dtype=np.complex128)
    for root in roots:
        z = complex(root)
        try:
            multiplier = abs(complex(rmap.derivative(z)))
        except PoleError:
            continue
        if multiplier > 1.0 + REPELLING_MARGIN:
            candidates.append((multiplier, z))
    if not candidates:
        raise UnsupportedMapError("no repelling fixed point found", degree=rmap.degree)
    # ties broken by position so the choice is reproducible
    candidates.sort(key=lambda item: (-item[0], item[1].real, item[1].imag))
    return candidates[0][1]


def _preimage_coefficients(rmap: RationalMap, targets: np.ndarray) -> np.ndarray:
    # rows of P(w) - z Q(w), ascending in w
    width = rmap.degree + 1
    num = np.zeros(width, dtype=np.complex128)
    num[: len(rmap.numerator)] = rmap.numerator
    den = np.zeros(width, dtype=np.complex128)
    den[: len(rmap.denominator)] = rmap.denominator
    return num[None, :] - targets[:, None] * den[None, :]


def preimages(rmap: RationalMap, targets: np.ndarray, *, chunk_size: int = PREIMAGE_CHUNK) -> np.ndarray:
    """All d preimages of each target, one row per target, sorted by real then imaginary part."""

    def solve(chunk: np.ndarray) -> np.ndarray:
        roots = aberth_roots(_preimage_coefficients(rmap, chunk))
        # Aberth output order depends on the iteration; sort to make the branch index meaningful
        order = np.lexsort((roots.imag, roots.real))
        return np.take_along_axis(roots, order, axis=1)

    targets = np.asarray(targets, dtype=np.complex128).ravel()
    if len(targets) == 0:
        return np.empty((0, rmap.degree), dtype=np.complex128)
    return np.concatenate(map_chunks(solve, targets, chunk_size=chunk_size))


def inverse_iteration_sample(
    rmap: RationalMap,
    count: int,
    depth: int,
    seed: int,
    *,
    chains: int = 16,
    escape_check_iterations: int = 20,
) -> JuliaSample:
    """Sample J by random inverse branches started at a repelling fixed point.

    Chains advance in lockstep, one branch choice per chain and step drawn from that chain's own
    seeded stream. Each chain discards max(depth // 2, 1) pullbacks and runs for at least `depth`
    steps. Output is chain-major, so it is a deterministic function of (map, count, depth, seed).
    """
    if count < 1:
        raise InvalidParameterError(messages.SAMPLE_COUNT_INVALID, count=count)
    if depth < 0:
        raise InvalidParameterError("depth must be nonnegative", depth=depth)
    chains = max(1, min(chains, count))
    burn_in = max(depth // 2, 1)
    quota = math.ceil(count / chains)
    steps = max(depth, burn_in + quota)

    start = repelling_fixed_point(rmap)
    streams = np.random.SeedSequence(seed).spawn(chains)
    choices = np.stack([np.random.default_rng(s).integers(0, rmap.degree, size=steps) for s in streams])
    rows = np.arange(chains)

    current = np.full(chains, start, dtype=np.complex128)
    recorded = np.empty((chains, quota), dtype=np.complex128)
    for step in range(steps):
        current = preimages(rmap, current)[rows, choices[:, step]]
        slot = step - (steps - quota)
        if slot >= 0:
            recorded[:, slot] = current

    points = recorded.reshape(-1)[:count]
    if rmap.is_polynomial:
        images = rmap.evaluate(points)
        escaped = escape_times(rmap, images, escape_check_iterations) >= 0
        fraction = float(np.mean(escaped))
        log = logger.warning if fraction > 0.01 else logger.debug
        log("julia_sample_escape_fraction", fraction=fraction, count=len(points))
    logger.info(
        "julia_sample_built",
        generator=Generator.inverse_iteration.value,
        count=len(points),
        depth=depth,
        seed=seed,
        chains=chains,
    )
    return JuliaSample(
        points=tuple(complex(p) for p in points),
        generator=Generator.inverse_iteration,
        seed=seed,
        count=count,
        depth=depth,
    )


def boundary_scan_sample(
    rmap: RationalMap,
    count: int,
    seed: int,
    *,
    resolution: int | None = None,
    max_iter: int = 64,
) -> JuliaSample:
    """Grid points that stay bounded but touch an escaping neighbour; polynomial maps only."""
    _require_polynomial(rmap)
    if count < 1:
        raise InvalidParameterError(messages.SAMPLE_COUNT_INVALID, count=count)
    size = resolution or max(256, int(8 * math.sqrt(count)))
    radius = rmap.escape_radius
    axis = np.linspace(-radius, radius, size)
    grid = axis[None, :] + 1j * axis[:, None]
    bounded = escape_times(rmap, grid, max_iter) < 0
    padded = np.pad(bounded, 1, constant_values=False)
    neighbour_escapes = (
        ~padded[:-2, 1:-1] | ~padded[2:, 1:-1] | ~padded[1:-1, :-2] | ~padded[1:-1, 2:]
    )
    edge = grid[bounded & neighbour_escapes]
    if len(edge) == 0:
        raise UnsupportedMapError("boundary scan found no Julia points", resolution=size)
    if len(edge) > count:
        keep = np.sort(np.random.default_rng(seed).choice(len(edge), size=count, replace=False))
        edge = edge[keep]
    elif len(edge) < count:
        logger.warning("boundary_scan_short", requested=count, found=len(edge), resolution=size)
    logger.info("julia_sample_built", generator=Generator.boundary_scan.value, count=len(edge), seed=seed)
    return JuliaSample(
        points=tuple(complex(p) for p in edge),
        generator=Generator.boundary_scan,
        seed=seed,
        count=count,
        depth=max_iter,
    )


def min_potential(sample: JuliaSample, rmap: RationalMap, phi: Potential) -> float:
    """min of phi over the sample points; an over-estimate of the minimum over J."""
    from app.dynamics.potentials import evaluate_potential

    if len(sample) == 0:
        raise InvalidParameterError("min_potential needs a nonempty sample")
    try:
        values = evaluate_potential(phi, rmap, sample.array)
    except CriticalPointError as exc:
        raise NonHyperbolicError("potential undefined on the sample", **exc.context) from exc
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NonHyperbolicError("potential not finite on the sample", index=bad, z=str(sample.points[bad]))
    value = float(np.min(values))
    logger.debug("min_potential_estimated", value=value, sample_size=len(sample))
    return value
