import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coercivity.errors import DegenerateCollisionError, InputError
from coercivity.geometry import (
    CollisionConfig,
    deviation_angle,
    omega_from_sigma,
    post_collision_omega,
    post_collision_sigma,
    sigma_from_omega,
    sigma_omega_jacobian,
)
from coercivity.quadrature import sphere_rule

vec3 = arrays(np.float64, 3, elements=st.floats(-5, 5))


def _unit(x):
    return x / np.linalg.norm(x)


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, vec3)
def test_sigma_map_conserves_momentum_and_energy(v, vs, s):
    if np.linalg.norm(s) < 1e-3:
        s = np.array([0.0, 0.0, 1.0])
    cfg = CollisionConfig(v, vs, _unit(s))
    vp, vps = post_collision_sigma(cfg)
    np.testing.assert_allclose(vp + vps, v + vs, atol=1e-12)
    e0 = v @ v + vs @ vs
    np.testing.assert_allclose(vp @ vp + vps @ vps, e0, rtol=1e-12, atol=1e-11)


@settings(max_examples=60, deadline=None)
@given(vec3, vec3, vec3)
def test_omega_and_sigma_give_same_pair(v, vs, w):
    if np.linalg.norm(w) < 1e-3 or np.linalg.norm(v - vs) < 1e-3:
        return
    w = _unit(w)
    if abs(w @ _unit(v - vs)) < 1e-3:
        return  # no deflection: omega is not recoverable
    vp, vps = post_collision_omega(v, vs, w)
    s = sigma_from_omega(v, vs, w)
    vp2, vps2 = post_collision_sigma(CollisionConfig(v, vs, _unit(s)))
    np.testing.assert_allclose(vp, vp2, atol=1e-10)
    np.testing.assert_allclose(vps, vps2, atol=1e-10)
    back = omega_from_sigma(v, vs, _unit(s))
    assert abs(abs(back @ w) - 1.0) < 1e-8


def test_deviation_angle_extremes():
    v, vs = np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])
    khat = _unit(v - vs)
    assert deviation_angle(CollisionConfig(v, vs, khat)) == pytest.approx(0.0, abs=1e-7)
    assert deviation_angle(CollisionConfig(v, vs, -khat)) == pytest.approx(np.pi)
    assert deviation_angle(CollisionConfig(v, vs, np.array([0, 1.0, 0]))) == pytest.approx(np.pi / 2)


def test_degenerate_and_bad_inputs():
    with pytest.raises(DegenerateCollisionError):
        deviation_angle(CollisionConfig(np.ones(3), np.ones(3), np.array([1.0, 0, 0])))
    with pytest.raises(InputError):
        CollisionConfig(np.ones(3), np.zeros(3), np.array([1.0, 1.0, 0]))
    with pytest.raises(InputError):
        CollisionConfig(np.ones(3), np.zeros(2), np.array([1.0, 0]))
    with pytest.raises(InputError):
        CollisionConfig(np.array([np.nan, 0, 0]), np.zeros(3), np.array([1.0, 0, 0]))


@pytest.mark.parametrize("N", [2, 3])
def test_jacobian_change_of_variables(N):
    # integrating F(sigma(omega)) * J over omega counts each sigma twice
    v, vs = np.eye(N)[0], -np.eye(N)[0] * 0.5
    khat = _unit(v - vs)
    F = lambda s: 1.0 + s @ khat + (s @ khat) ** 2
    pts, w = sphere_rule(N, 60)
    direct = np.sum(w * np.array([F(s) for s in pts]))
    tot = 0.0
    for om, wi in zip(pts, w):
        s = sigma_from_omega(v, vs, om)
        theta = np.arccos(np.clip(s @ khat, -1, 1))
        tot += wi * F(s) * sigma_omega_jacobian(theta, N)
    assert tot == pytest.approx(2.0 * direct, rel=2e-3)
