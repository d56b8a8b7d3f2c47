"""Simultaneous polynomial root finding (Aberth-Ehrlich iteration).

Works on a batch of monic complex polynomials at once so that a whole
frequency sweep is one call.
"""
from __future__ import annotations

import numpy as np

from .errors import NonConvergenceError

_EPS = np.finfo(float).eps


def _horner(coeffs, z):
    """Value and derivative of polynomials (descending coefficients) at ``z``."""
    p = np.broadcast_to(coeffs[..., :1], z.shape).astype(complex)
    dp = np.zeros_like(p)
    for k in range(1, coeffs.shape[-1]):
        dp = dp * z + p
        p = p * z + coeffs[..., k : k + 1]
    return p, dp


def _abs_horner(coeffs, z):
    """Evaluation-error scale ``sum |c_k| |z|^(n-k)``."""
    a = np.abs(coeffs)
    r = np.abs(z)
    acc = np.broadcast_to(a[..., :1], z.shape).astype(float)
    for k in range(1, a.shape[-1]):
        acc = acc * r + a[..., k : k + 1]
    return acc


def aberth_roots(coeffs, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """All roots of each polynomial in ``coeffs``.

    ``coeffs`` has shape ``(..., n + 1)`` holding descending-power
    coefficients; the leading one must be non-zero. Returns shape
    ``(..., n)``. Raises :class:`NonConvergenceError` if some root neither
    settles to ``tol`` (relative step) nor reaches rounding-level residual.
    """
    c = np.asarray(coeffs, dtype=complex)
    squeeze = c.ndim == 1
    c = np.atleast_2d(c)
    if np.any(c[..., 0] == 0):
        raise ValueError("leading coefficient must be non-zero")
    c = c / c[..., :1]
    n = c.shape[-1] - 1
    if n == 0:
        out = np.zeros(c.shape[:-1] + (0,), dtype=complex)
        return out[0] if squeeze else out
    if n == 1:
        out = -c[..., 1:2]
        return out[0] if squeeze else out

    # Fujiwara bound gives a starting circle enclosing every root.
    k = np.arange(1, n + 1)
    radius = 2.0 * np.max(np.abs(c[..., 1:]) ** (1.0 / k), axis=-1)
    radius = np.where(radius > 0, radius, 1.0)
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = radius[..., None] * 0.5 * np.exp(1j * angles)

    active = np.ones(z.shape, dtype=bool)
    eye = np.eye(n, dtype=bool)
    for _ in range(max_iter):
        p, dp = _horner(c, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[..., :, None] - z[..., None, :]
            inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, diff))
            step = ratio / (1.0 - ratio * inv.sum(axis=-1))
        step = np.where(np.isfinite(step), step, 0.0)
        step = np.where(active, step, 0.0)
        z = z - step
        small_step = np.abs(step) <= tol * np.maximum(1.0, np.abs(z))
        tiny_residual = np.abs(_horner(c, z)[0]) <= 8 * n * _EPS * _abs_horner(c, z)
        active = ~(small_step | tiny_residual)
        if not active.any():
            break
    else:
        p, _ = _horner(c, z)
        raise NonConvergenceError(
            f"root iteration did not converge in {max_iter} iterations",
            residual=float(np.max(np.abs(p))),
        )
    return z[0] if squeeze else z


def spectral_radius(coeffs, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Largest root modulus of each polynomial in ``coeffs``."""
    return np.max(np.abs(aberth_roots(coeffs, tol, max_iter)), axis=-1)
