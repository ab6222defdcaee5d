from math import pi

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coercivity.errors import InputError
from coercivity.quadrature import (
    build_angular_grid,
    build_velocity_grid,
    composite_gauss,
    gaussian_moment,
    graded_theta_rule,
    integrate,
    jacobi_left,
    sphere_area,
    sphere_rule,
)


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * pi)
    assert sphere_area(3) == pytest.approx(4 * pi)


@pytest.mark.parametrize("N", [2, 3])
def test_sphere_rule_exact_for_even_monomials(N):
    pts, w = sphere_rule(N, 8)
    # int_{S^{N-1}} x1^4 x2^2
    exact = {2: pi / 8, 3: 4 * pi / 35}[N]
    assert np.sum(w * pts[:, 0] ** 4 * pts[:, 1] ** 2) == pytest.approx(exact, rel=1e-12)


_GRIDS = {}


def _grid(kind):
    if kind not in _GRIDS:
        _GRIDS[kind] = build_velocity_grid(3, kind, order=24)
    return _GRIDS[kind]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4))
def test_velocity_grids_match_gaussian_moments(a, b, c):
    k = (2 * a, 2 * b, 2 * c)
    for kind in ("tensor-hermite", "radial-spherical"):
        grid = _grid(kind)
        val = grid.integrate_mu(np.prod(grid.nodes ** np.array(k), axis=1))
        assert val == pytest.approx(gaussian_moment(k), rel=1e-9)


def test_velocity_grid_rejects_bad_kind():
    with pytest.raises(InputError):
        build_velocity_grid(3, "monte-carlo")
    with pytest.raises(InputError):
        build_velocity_grid(4)


def test_composite_gauss_batch():
    x, w = composite_gauss(np.array([[0.0, 1.0, 2.0], [0.0, 0.0, 3.0]]), 5)
    assert x.shape == (2, 10)
    np.testing.assert_allclose(np.sum(w * x**3, axis=1), [4.0, 81 / 4])


@pytest.mark.parametrize("s", [-0.5, 0.3, 1.5])
def test_jacobi_left_absorbs_endpoint_power(s):
    t, w = jacobi_left(10, 2.0, s)
    assert np.sum(w * t**s * (1 + t)) == pytest.approx(2 ** (s + 1) / (s + 1) + 2 ** (s + 2) / (s + 2))


@pytest.mark.parametrize("alpha", [0.25, 1.0, 1.75])
def test_graded_rule_singular_angular_integral(alpha):
    t, w = graded_theta_rule(pi, alpha)
    exact = pi ** (2 - alpha) / (2 - alpha)
    assert np.sum(w * t ** (1 - alpha)) == pytest.approx(exact, rel=1e-8)


def test_integrate_reports_error():
    vgrid = build_velocity_grid(3, order=12)
    val, err = integrate(lambda v: np.exp(-0.5 * np.sum(v * v, axis=1)), vgrid)
    assert val == pytest.approx((2 * pi) ** 1.5, rel=1e-10)
    assert err < 1e-8


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.5])
def test_angular_grid_integrates_kernel_times_deflection(alpha):
    # b(theta) sin^2(theta/2) over S^2 equals 4 pi / (1 - alpha / 2)
    grid = build_angular_grid(3, alpha)
    f = lambda th, psi: np.sin(0.5 * th) ** (-alpha) + 0 * psi
    val, err = integrate(f, grid)
    assert val == pytest.approx(4 * pi / (1 - alpha / 2), rel=1e-8)
    assert err < 1e-8


@pytest.mark.parametrize("N, rel", [(2, 1e-7), (3, 1e-10)])
def test_angular_grid_reproduces_sphere_area(N, rel):
    # on the circle a constant is not in the innermost cell's theta**(1-alpha) class
    grid = build_angular_grid(N, 0.5)
    assert grid.integrate_sigma(np.ones((len(grid.theta), len(grid.azimuth)))) == pytest.approx(
        sphere_area(N), rel=rel)


@pytest.mark.parametrize("N", [2, 3])
def test_bracket_moment(N):
    grid = build_velocity_grid(N, order=8)
    assert grid.integrate_mu(1 + np.sum(grid.nodes**2, axis=1)) == pytest.approx(1 + N, rel=1e-12)


def test_error_estimate_shrinks_under_refinement():
    f = lambda v: np.exp(-0.5 * np.sum(v * v, axis=1)) * np.cos(np.sum(v, axis=1))
    g1 = build_velocity_grid(3, order=6)
    g2 = g1.refine()
    e1 = integrate(f, g1)[1]
    e2 = integrate(f, g2)[1]
    assert e2 < e1
