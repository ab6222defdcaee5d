import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from coercivity import (
    KernelParams,
    TrialFunction,
    VhsParams,
    apply_L,
    build_basis,
    coercivity_estimate,
    dirichlet_decompose,
    dirichlet_form,
    galerkin_assemble,
)
from coercivity.boltzmann import decomposition_matrices, default_beta, lb_quadratic_form
from coercivity.errors import DomainError, UnsupportedModelError
from coercivity.spaces import BasisSpec

# Monte Carlo estimate of D((v1^2 - v2^2) mu^{1/2}) at gamma=0, alpha=0.5:
# 2e6 importance samples (theta ~ pi U^{1/(2-alpha)}, v, v* standard normal), seed 0
MC_MEAN, MC_STD = 114.8126, 0.3495


def quadrupole(basis):
    return TrialFunction.from_polynomial(basis, {(2, 0, 0): 1.0, (0, 2, 0): -1.0})


def maxwell_quadrupole_eigenvalue(alpha):
    # Maxwell molecules: traceless quadratic Hermite modes have eigenvalue
    # 2 pi int b(theta) sin(theta) (3/4) sin^2(theta) dtheta
    f = lambda t: np.sin(t / 2) ** (-2 - alpha) * np.sin(t) ** 3
    return 2 * np.pi * 0.75 * quad(f, 0, np.pi)[0]


def test_matches_monte_carlo_oracle():
    D = dirichlet_form(quadrupole(build_basis(3, 2)), KernelParams(3, 0.0, 0.5))
    assert abs(D - MC_MEAN) <= 3 * MC_STD


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_maxwell_molecule_eigenvalue(alpha):
    g = quadrupole(build_basis(3, 2))
    D = dirichlet_form(g, KernelParams(3, 0.0, alpha))
    assert D == pytest.approx(4.0 * maxwell_quadrupole_eigenvalue(alpha), rel=1e-9)


def test_rotation_invariance():
    basis = build_basis(3, 2)
    p = KernelParams(3, 0.5, 0.5)
    # v1 v2 is the quadrupole rotated by 45 degrees, halved
    a = dirichlet_form(TrialFunction.from_polynomial(basis, {(1, 1, 0): 1.0}), p)
    b = dirichlet_form(quadrupole(basis), p)
    assert a == pytest.approx(b / 4, rel=1e-9)


@pytest.mark.parametrize("gamma,alpha", [(0.0, 0.5), (-1.0, 1.0)])
def test_matrix_psd_with_invariant_kernel(gamma, alpha):
    A = galerkin_assemble(KernelParams(3, gamma, alpha), BasisSpec(3, 4))
    np.testing.assert_allclose(A, A.T, atol=1e-12 * np.abs(A).max())
    ev = np.linalg.eigvalsh(A)
    scale = np.abs(A).max()
    assert ev.min() > -1e-10 * scale
    assert np.sum(ev < 1e-6 * scale) == 5
    assert np.abs(A[:5]).max() < 1e-8 * scale


def test_monotone_in_K_and_theta0():
    g = quadrupole(build_basis(3, 3))
    base = dirichlet_form(g, KernelParams(3, 0.0, 0.5))
    assert dirichlet_form(g, KernelParams(3, 0.0, 0.5, K=2.5)) == pytest.approx(2.5 * base, rel=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals = [dirichlet_form(g, KernelParams(3, 0.0, 0.5, theta0=t)) for t in (0.5, 1.5, np.pi)]
    assert vals[0] < vals[1] < vals[2]
    assert dirichlet_form(g * 3.0, KernelParams(3, 0.0, 0.5)) == pytest.approx(9 * base, rel=1e-12)


def test_two_dimensional_form():
    basis = build_basis(2, 3)
    g = TrialFunction.from_polynomial(basis, {(2, 0): 1.0, (0, 2): -1.0})
    assert dirichlet_form(g, KernelParams(2, 0.0, 0.5)) > 0
    one = TrialFunction.from_polynomial(basis, {(2, 0): 1.0, (0, 2): 1.0})
    assert abs(dirichlet_form(one, KernelParams(2, 0.0, 0.5))) < 1e-8


def test_coercivity_decreases_with_degree_and_increases_with_eps():
    p = KernelParams(3, 0.0, 0.5)
    lams = [coercivity_estimate(p, BasisSpec(3, d)).lambda_ for d in (3, 4, 5)]
    assert lams[0] >= lams[1] >= lams[2] > 0
    by_eps = [coercivity_estimate(p, BasisSpec(3, 4), eps=e).lambda_ for e in (0.0, 0.1, 0.2)]
    assert by_eps[0] <= by_eps[1] <= by_eps[2]


def test_coercivity_vector_attains_estimate():
    p = KernelParams(3, 0.5, 0.5)
    est = coercivity_estimate(p, BasisSpec(3, 4))
    basis = build_basis(3, 4)
    assert np.all(est.vector[: basis.n_invariants] == 0)
    D = dirichlet_form(TrialFunction(basis, est.vector), p)
    assert D == pytest.approx(est.lambda_, rel=1e-8)
    assert est.residuals["quad_error"] < 1e-6
    with pytest.raises(DomainError):
        coercivity_estimate(p, BasisSpec(3, 4), eps=-0.1)


def test_truncated_pieces_sum_to_truncated_form():
    basis = build_basis(3, 4)
    p = KernelParams(3, 0.0, 0.5)
    mats = decomposition_matrices(p, basis, with_bracket=True)
    total = mats["d1"] + mats["d2"] + mats["d3"] + mats["d4"]
    np.testing.assert_allclose(total, mats["trunc"], atol=1e-9 * np.abs(mats["trunc"]).max())


def test_decomposition_beta_window():
    g = quadrupole(build_basis(3, 3))
    p = KernelParams(3, 0.0, 0.5)
    assert default_beta(3, 0.5) == 2.25
    with pytest.raises(DomainError):
        dirichlet_decompose(g, p, beta=2.0)
    with pytest.raises(DomainError):
        dirichlet_decompose(g, p, beta=2.5)
    with pytest.raises(UnsupportedModelError):
        decomposition_matrices(VhsParams(1.0), build_basis(3, 3))


def test_linearized_operator_kills_gaussian():
    basis = build_basis(3, 2)
    g = TrialFunction.from_polynomial(basis, {(0, 0, 0): 1.0})
    pts = np.array([[0.0, 0.0, 0.0], [1.0, -0.5, 0.3], [2.5, 0.0, 1.0]])
    out = apply_L(g, VhsParams(1.0), pts)
    assert np.abs(out).max() < 1e-7
    with pytest.raises(UnsupportedModelError):
        apply_L(g, KernelParams(3, 0.0, 0.5), pts)


@pytest.mark.slow
def test_cutoff_operator_matches_dirichlet_form():
    # <L g, g> through nu - K+ + K^c against the Taylor-assembled form
    g = quadrupole(build_basis(3, 2))
    p = VhsParams(1.0)
    D = dirichlet_form(g, p)
    assert D == pytest.approx(90.74963716636, rel=1e-9)
    assert lb_quadratic_form(g, g, p, order=6, radial=6) == pytest.approx(D, rel=1e-6)
