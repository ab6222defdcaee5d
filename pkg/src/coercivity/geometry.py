"""Kinematics of elastic binary collisions.

Two parametrizations of the outgoing pair are supported:

* sigma-form: ``v' = (v+v*)/2 + |v-v*| sigma/2``, ``v'* = (v+v*)/2 - |v-v*| sigma/2``
* omega-form: ``v' = v + ((v*-v).omega) omega``, ``v'* = v* - ((v*-v).omega) omega``

The deviation angle is ``theta`` with ``cos(theta) = (v'*-v').(v*-v)/|v*-v|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCollisionError, InputError

__all__ = [
    "CollisionConfig",
    "post_collision_sigma",
    "post_collision_omega",
    "deviation_angle",
    "sigma_from_omega",
    "omega_from_sigma",
    "sigma_omega_jacobian",
]

UNIT_TOL = 1e-12


def as_velocity(x, name="velocity") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.shape[0] not in (2, 3):
        raise InputError(f"{name} must be a vector of dimension 2 or 3, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite components")
    return v


def _check_unit(x, name):
    u = as_velocity(x, name)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise InputError(f"{name} must be a unit vector (|{name}| = {np.linalg.norm(u)!r})")
    return u


@dataclass(frozen=True)
class CollisionConfig:
    v: np.ndarray
    v_star: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        v = as_velocity(self.v, "v")
        vs = as_velocity(self.v_star, "v_star")
        s = _check_unit(self.sigma, "sigma")
        if not v.shape == vs.shape == s.shape:
            raise InputError("v, v_star and sigma must share one dimension")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "v_star", vs)
        object.__setattr__(self, "sigma", s)

    @property
    def N(self) -> int:
        return self.v.shape[0]


def post_collision_sigma(cfg: CollisionConfig):
    """Outgoing pair ``(v', v'*)`` in the sigma parametrization."""
    center = 0.5 * (cfg.v + cfg.v_star)
    half = 0.5 * np.linalg.norm(cfg.v - cfg.v_star) * cfg.sigma
    return center + half, center - half


def post_collision_omega(v, v_star, omega):
    """Outgoing pair ``(v', v'*)`` in the omega parametrization."""
    v = as_velocity(v, "v")
    v_star = as_velocity(v_star, "v_star")
    omega = _check_unit(omega, "omega")
    shift = np.dot(v_star - v, omega) * omega
    return v + shift, v_star - shift


def deviation_angle(cfg: CollisionConfig) -> float:
    rel = cfg.v_star - cfg.v
    r2 = float(np.dot(rel, rel))
    if r2 == 0.0:
        raise DegenerateCollisionError("deviation angle undefined for v == v_star")
    vp, vps = post_collision_sigma(cfg)
    c = float(np.dot(vps - vp, rel)) / r2
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def sigma_from_omega(v, v_star, omega) -> np.ndarray:
    """The sigma producing the same outgoing pair as ``omega``."""
    v = as_velocity(v, "v")
    v_star = as_velocity(v_star, "v_star")
    omega = _check_unit(omega, "omega")
    k = v - v_star
    nk = np.linalg.norm(k)
    if nk == 0.0:
        raise DegenerateCollisionError("v == v_star")
    k = k / nk
    return k - 2.0 * np.dot(k, omega) * omega


def omega_from_sigma(v, v_star, sigma) -> np.ndarray:
    """One of the two omegas (``+-``) matching ``sigma``.

    ``omega`` is parallel to ``v' - v``; at ``sigma == khat`` (no deflection)
    any direction orthogonal to ``khat`` works and one is returned.
    """
    v = as_velocity(v, "v")
    v_star = as_velocity(v_star, "v_star")
    sigma = _check_unit(sigma, "sigma")
    k = v - v_star
    nk = np.linalg.norm(k)
    if nk == 0.0:
        raise DegenerateCollisionError("v == v_star")
    k = k / nk
    d = k - sigma
    nd = np.linalg.norm(d)
    if nd < 1e-14:
        e = np.zeros_like(k)
        e[int(np.argmin(np.abs(k)))] = 1.0
        e -= np.dot(e, k) * k
        return e / np.linalg.norm(e)
    return d / nd


def sigma_omega_jacobian(theta, N: int):
    """``dsigma / domega = 2^{N-1} sin^{N-2}(theta/2)`` for the 2-to-1 map.

    Integrating ``F(sigma(omega)) * jacobian`` over the whole omega sphere
    counts every sigma twice.
    """
    return 2.0 ** (N - 1) * np.abs(np.sin(0.5 * np.asarray(theta))) ** (N - 2)
