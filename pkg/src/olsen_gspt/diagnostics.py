"""Small numerical helpers shared by the residual and convergence checks."""
from __future__ import annotations

import numpy as np

__all__ = ["loglog_slope", "sphere_directions", "max_residual", "residual_slope", "dyadic_radii"]


def loglog_slope(x, y) -> float:
    """Least-squares slope of log|y| against log x."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if np.any(y == 0):
        raise ValueError("zero residual; slope undefined")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def dyadic_radii(r0: float = 1e-2, n: int = 4) -> np.ndarray:
    return r0 * 0.5 ** np.arange(n)


def sphere_directions(dim: int, n: int, nonneg=(), seed: int = 0) -> np.ndarray:
    """n unit vectors in R^dim; components listed in ``nonneg`` are made >= 0."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n, dim))
    for i in nonneg:
        d[:, i] = np.abs(d[:, i])
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def max_residual(residual, center, directions, r: float) -> float:
    center = np.asarray(center, dtype=float)
    return max(abs(float(residual(center + r * u))) for u in directions)


def residual_slope(residual, center, directions, radii=None) -> tuple:
    """(slope, radii, residuals) for the max residual over ``directions`` at each radius."""
    radii = dyadic_radii() if radii is None else np.asarray(radii, dtype=float)
    vals = np.array([max_residual(residual, center, directions, r) for r in radii])
    return loglog_slope(radii, vals), radii, vals
