"""Simultaneous polynomial root finding (Aberth–Ehrlich), batched over many polynomials."""

from __future__ import annotations

import numpy as np

from app.shared.exceptions import RootFindingError


def _horner(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    # coeffs: (B, d+1) ascending; x: (B, k)
    result = np.broadcast_to(coeffs[:, -1:], x.shape).astype(np.complex128)
    for k in range(coeffs.shape[1] - 2, -1, -1):
        result = result * x + coeffs[:, k : k + 1]
    return result


def aberth_roots(coeffs: np.ndarray, *, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Return all roots of each polynomial in a batch.

    `coeffs` has shape (B, d+1) with coefficients in ascending degree order, or (d+1,) for a
    single polynomial. The result has shape (B, d) (or (d,)). Initial guesses sit on the Cauchy
    bound circle with a fixed angular offset, so the output is a deterministic function of the input.
    """
    single = np.ndim(coeffs) == 1
    c = np.atleast_2d(np.asarray(coeffs, dtype=np.complex128))
    degree = c.shape[1] - 1
    if degree < 1:
        empty = np.empty((c.shape[0], 0), dtype=np.complex128)
        return empty[0] if single else empty

    lead = c[:, -1]
    if np.any(np.abs(lead) == 0.0):
        raise RootFindingError("leading coefficient vanishes", degree=degree)
    monic = c / lead[:, None]
    if degree == 1:
        roots = -monic[:, :1]
        return roots[0] if single else roots

    dmonic = monic[:, 1:] * np.arange(1, degree + 1)
    radius = 1.0 + np.max(np.abs(monic[:, :-1]), axis=1)
    angles = 2.0 * np.pi * np.arange(degree) / degree + 0.4
    x = radius[:, None] * np.exp(1j * angles)[None, :]

    eye = np.eye(degree, dtype=bool)
    converged = False
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            p = _horner(monic, x)
            dp = _horner(dmonic, x)
            diff = x[:, :, None] - x[:, None, :]
            diff[:, eye] = 1.0
            inv = 1.0 / diff
            inv[:, eye] = 0.0
            ratio = p / dp
            delta = ratio / (1.0 - ratio * inv.sum(axis=2))
            # an exact hit makes p = 0 and the step vanishes
            delta = np.where(p == 0, 0.0, delta)
            x = x - delta
            if not np.all(np.isfinite(x)):
                raise RootFindingError("Aberth iteration produced non-finite roots", degree=degree)
            if np.all(np.abs(delta) <= tol * (1.0 + np.abs(x))):
                converged = True
                break
    if not converged:
        residual = np.max(np.abs(_horner(monic, x)) / (1.0 + np.abs(x)) ** degree)
        if residual > 1e-9:
            raise RootFindingError("Aberth iteration did not converge", degree=degree, residual=float(residual))
    return x[0] if single else x
