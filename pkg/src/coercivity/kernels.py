"""Collision-kernel models.

The angular factor is the pure power profile

    b_alpha(theta) = sin(theta/2) ** (-(N-1) - alpha),

and the kernel family is ``B = K |v - v*|**gamma b_alpha(theta) 1{theta <= theta0}``.
The truncation sets used to localize the Dirichlet form are

* ``c_beta``: ``sin(theta/2) <= |v - v*| ** (-beta / ((N-1) + alpha))``
* ``c_bar``:  ``|v - v'| <= 1``, i.e. ``sin(theta/2) <= 1 / |v - v*|``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import asin, cos, pi

import numpy as np

from .errors import DomainError, InputError, SingularityError
from .geometry import CollisionConfig, deviation_angle

__all__ = [
    "KernelParams",
    "TruncationSpec",
    "eval_b_alpha",
    "eval_B",
    "inverse_power_map",
    "truncation_indicator",
    "cbeta_threshold",
    "cbeta_angular_measure",
    "cap_measure",
    "bracket",
]


def bracket(v):
    """Japanese bracket ``<v> = (1 + |v|^2)^{1/2}`` along the last axis."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + np.sum(v * v, axis=-1))


@dataclass(frozen=True)
class KernelParams:
    N: int = 3
    gamma: float = 0.0
    alpha: float = 0.5
    K: float = 1.0
    theta0: float = pi

    def __post_init__(self):
        if self.N not in (2, 3):
            raise InputError(f"dimension must be 2 or 3, got {self.N}")
        if not self.gamma > -self.N:
            raise DomainError(f"gamma must exceed -N = {-self.N}, got {self.gamma}")
        if not 0.0 <= self.alpha < 2.0:
            raise DomainError(f"alpha must lie in [0, 2), got {self.alpha}")
        if not self.K > 0.0:
            raise DomainError(f"K must be positive, got {self.K}")
        if not 0.0 < self.theta0 <= pi:
            raise DomainError(f"theta0 must lie in (0, pi], got {self.theta0}")


@dataclass(frozen=True)
class TruncationSpec:
    beta: float
    mode: str = "c_beta"
    N: int = 3
    alpha: float = 0.5

    def __post_init__(self):
        if self.mode not in ("c_beta", "c_bar"):
            raise InputError(f"unknown truncation mode {self.mode!r}")
        top = (self.N - 1) + self.alpha
        if self.mode == "c_beta" and not 0.0 < self.beta <= top:
            raise DomainError(f"beta must lie in (0, {top}], got {self.beta}")


def eval_b_alpha(theta, alpha: float, N: int, symmetrized: bool = False):
    """Angular factor ``sin(theta/2)^{-(N-1)-alpha}``.

    With ``symmetrized`` the folded profile ``1{theta <= pi/2} [b(theta) + b(pi - theta)]``
    is returned; it gives the same integral as ``b`` against any integrand
    that is even under ``sigma -> -sigma``.
    """
    th = np.asarray(theta, dtype=float)
    if np.any(th <= 0.0) or np.any(th > pi + 1e-15):
        if np.any(th == 0.0):
            raise SingularityError("b_alpha is singular at theta = 0")
        raise InputError("theta must lie in (0, pi]")
    e = -(N - 1) - alpha
    b = np.sin(0.5 * th) ** e
    if symmetrized:
        b = np.where(th <= 0.5 * pi, b + np.cos(0.5 * th) ** e, 0.0)
    return b if b.ndim else float(b)


def eval_B(v, v_star, sigma, p: KernelParams) -> float:
    cfg = CollisionConfig(v, v_star, sigma)
    r = float(np.linalg.norm(cfg.v - cfg.v_star))
    if r == 0.0:
        if p.gamma < 0:
            raise SingularityError("|v - v*|^gamma is singular at v == v* for gamma < 0")
        # angle undefined; measure-zero set
        return 0.0
    th = deviation_angle(cfg)
    if th > p.theta0 or th == 0.0:
        return 0.0
    return p.K * r**p.gamma * eval_b_alpha(th, p.alpha, p.N)


def inverse_power_map(s: float, N: int = 3):
    """``(gamma, alpha, tag)`` for the inverse-power interaction ``1/r^{s-1}``.

    Tags: ``hard`` for s >= 5 (``maxwellian`` at s == 5), ``moderately soft`` for
    3 <= s < 5, ``soft`` for 2 < s < 3.
    """
    if N != 3:
        raise InputError("the inverse-power parameter map is defined for N = 3")
    if not s > 2:
        raise DomainError(f"s must exceed 2, got {s}")
    gamma = (s - 5.0) / (s - 1.0)
    alpha = 2.0 / (s - 1.0)
    if s == 5:
        tag = "maxwellian"
    elif s > 5:
        tag = "hard"
    elif s >= 3:
        tag = "moderately soft"
    else:
        tag = "soft"
    return gamma, alpha, tag


def cbeta_threshold(r, beta: float, alpha: float, N: int):
    """Upper bound ``x`` on ``sin(theta/2)`` inside C_beta, clipped to 1."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.where(r > 0, r ** (-beta / ((N - 1) + alpha)), 1.0)
    return np.minimum(1.0, x)


def truncation_indicator(v, v_star, sigma, spec: TruncationSpec, p: KernelParams) -> int:
    cfg = CollisionConfig(v, v_star, sigma)
    r = float(np.linalg.norm(cfg.v - cfg.v_star))
    if r == 0.0:
        return 1
    th = deviation_angle(cfg)
    s2 = np.sin(0.5 * th)
    if spec.mode == "c_bar":
        # |v - v'| = r sin(theta/2)
        return int(r * s2 <= 1.0)
    return int(s2 <= cbeta_threshold(r, spec.beta, p.alpha, p.N))


def cap_measure(a, N: int):
    """Measure of the cap ``{sigma : theta(sigma) <= a}`` on S^{N-1}."""
    a = float(min(max(a, 0.0), pi))
    if N == 2:
        return 2.0 * a
    if N == 3:
        return 2.0 * pi * (1.0 - cos(a))
    raise InputError(f"dimension must be 2 or 3, got {N}")


def cbeta_angular_measure(r: float, beta: float, alpha: float, N: int = 3) -> float:
    """Exact ``int 1_{C_beta} dsigma`` at relative speed ``r``."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    x = float(cbeta_threshold(r, beta, alpha, N))
    a = 2.0 * asin(x)
    return cap_measure(a, N)

