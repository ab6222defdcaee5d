"""Least-squares power-law fits on log-log data."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FitError

__all__ = ["PowerFit", "power_fit"]


@dataclass(frozen=True)
class PowerFit:
    slope: float
    intercept: float
    residual: float  # rms of the log residuals
    n: int

    def within(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol


def power_fit(x, y, shift: float = 0.0, min_points: int = 4, min_decades: float = 0.5) -> PowerFit:
    """Fit ``y ~ C (shift + x)^slope``.

    ``shift = 1`` fits against ``log(1 + x)``, which is the natural abscissa
    for weights like ``(1 + |v|)^s``.  Raises :class:`FitError` on too few
    points, non-positive data or an abscissa spread below ``min_decades``.
    """
    x = np.asarray(x, dtype=float) + shift
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise FitError("x and y must be 1-d arrays of equal length")
    if len(x) < min_points:
        raise FitError(f"need at least {min_points} points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise FitError("power fits need positive finite data")
    lx, ly = np.log(x), np.log(y)
    if (lx.max() - lx.min()) / np.log(10.0) < min_decades:
        raise FitError("abscissa spread too small for a slope fit")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return PowerFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res * res))), len(x))
