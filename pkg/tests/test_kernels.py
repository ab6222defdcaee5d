import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coercivity.errors import DomainError, InputError, SingularityError
from coercivity.kernels import (
    KernelParams,
    TruncationSpec,
    bracket,
    cbeta_angular_measure,
    eval_B,
    eval_b_alpha,
    inverse_power_map,
    truncation_indicator,
)
from coercivity.quadrature import sphere_rule


def test_b_alpha_values():
    assert eval_b_alpha(np.pi, 0.5, 3) == pytest.approx(1.0)
    assert eval_b_alpha(np.pi / 3, 1.0, 3) == pytest.approx(0.5 ** -3)
    with pytest.raises(SingularityError):
        eval_b_alpha(0.0, 0.5, 3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, np.pi / 2), st.floats(0.0, 1.9))
def test_symmetrized_profile_folds(theta, alpha):
    b = eval_b_alpha(theta, alpha, 3)
    b_mirror = eval_b_alpha(np.pi - theta, alpha, 3)
    assert eval_b_alpha(theta, alpha, 3, symmetrized=True) == pytest.approx(b + b_mirror)


def test_eval_B_rotation_invariant():
    p = KernelParams(3, 0.5, 0.5)
    v, vs, s = np.array([1.0, 0.2, -0.3]), np.array([-0.5, 1.0, 0.1]), np.array([0.0, 0.6, 0.8])
    Q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    assert eval_B(v, vs, s, p) == pytest.approx(eval_B(Q @ v, Q @ vs, Q @ s, p), rel=1e-12)


def test_eval_B_cutoff_and_singularity():
    p = KernelParams(3, 0.0, 0.5, theta0=np.pi / 2)
    v, vs = np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])
    assert eval_B(v, vs, np.array([-1.0, 0, 0]), p) == 0.0
    with pytest.raises(SingularityError):
        eval_B(v, v, np.array([1.0, 0, 0]), KernelParams(3, -1.0, 0.5))


def test_params_validation():
    with pytest.raises(DomainError):
        KernelParams(3, -3.0, 0.5)
    with pytest.raises(DomainError):
        KernelParams(3, 0.0, 2.0)
    with pytest.raises(InputError):
        KernelParams(4)
    with pytest.raises(DomainError):
        TruncationSpec(beta=3.0, N=3, alpha=0.5)


def test_inverse_power_map():
    assert inverse_power_map(5.0) == (0.0, 0.5, "maxwellian")
    g, a, tag = inverse_power_map(3.0)
    assert (g, a, tag) == (-1.0, 1.0, "moderately soft")
    assert inverse_power_map(7.0)[2] == "hard"
    assert inverse_power_map(2.5)[2] == "soft"
    with pytest.raises(DomainError):
        inverse_power_map(2.0)


def test_bracket():
    assert bracket(np.zeros(3)) == 1.0
    assert bracket(np.array([3.0, 4.0])) == pytest.approx(np.sqrt(26.0))


@pytest.mark.parametrize("r", [0.5, 2.0, 10.0])
def test_cbeta_measure_matches_indicator_average(r):
    p = KernelParams(3, 0.0, 0.5)
    spec = TruncationSpec(beta=1.5, N=3, alpha=0.5)
    v, vs = np.array([r / 2, 0, 0]), np.array([-r / 2, 0, 0])
    pts, w = sphere_rule(3, 400)
    ind = np.array([truncation_indicator(v, vs, s / np.linalg.norm(s), spec, p) for s in pts])
    assert np.sum(w * ind) == pytest.approx(cbeta_angular_measure(r, 1.5, 0.5), rel=2e-2, abs=1e-3)
