"""Linearized Landau operator: Dirichlet form, sigma-norm coercivity and the H^1 chain.

The Dirichlet form is evaluated in the symmetric representation

    D_L(g) = 1/2 int int mu mu* a_ij(v - v*) (d_i h - d_i h*)(d_j h - d_j h*) dv dv*,

``h = mu^{-1/2} g``.  With ``v = V + u/2``, ``v* = V - u/2`` the difference
``d_i h(v) - d_i h(v*)`` of a polynomial is the odd part of its Taylor series
at ``V``, so the ``V`` integral is Gauss-Hermite, the ``|u|`` integral a Gamma
function (this absorbs the ``|u|^{gamma+2}`` singularity for every
``gamma >= -N``) and the direction integral an exact sphere moment.

:func:`landau_dirichlet_direct` evaluates ``<L_L g, g>`` straight from the
operator ``-mu^{-1/2}[Q(mu, mu^{1/2} g) + Q(mu^{1/2} g, mu)]`` with the
convolutions done by quadrature; it serves as the validation oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import gamma as gamma_fn, lgamma, pi

import numpy as np
from scipy import special

from .boltzmann import CoercivityEstimate, _as_basis, _bilinear, _powers, _indices, _inv_factorials, generalized_min
from .errors import DomainError, InputError, SingularityError
from .kernels import bracket
from .quadrature import build_velocity_grid, composite_gauss, sphere_rule, weighted_sum
from .spaces import Basis, TrialFunction, default_grid, divergence_weight

__all__ = [
    "LandauParams",
    "landau_a",
    "landau_dirichlet_form",
    "landau_dirichlet_direct",
    "landau_assemble",
    "sigma_gram",
    "landau_coercivity_estimate",
    "ChainReport",
    "mcoerc_chain_check",
    "sigma_consequence_check",
]


@dataclass(frozen=True)
class LandauParams:
    N: int = 3
    gamma: float = 0.0

    def __post_init__(self):
        if self.N not in (2, 3):
            raise InputError(f"dimension must be 2 or 3, got {self.N}")
        if not self.gamma >= -self.N:
            raise DomainError(f"gamma must be >= -N = {-self.N}, got {self.gamma}")


def landau_a(z, gamma: float) -> np.ndarray:
    """``a(z) = (I - z z^T / |z|^2) |z|^{gamma+2}``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise InputError("z must be a vector")
    n2 = float(z @ z)
    if n2 == 0.0:
        raise SingularityError("a(z) is undefined at z = 0")
    return (np.eye(z.shape[0]) - np.outer(z, z) / n2) * n2 ** ((gamma + 2.0) / 2.0)


def _sphere_moment(kappa) -> float:
    """Exact ``int_{S^{N-1}} x^kappa dsigma``."""
    kappa = np.asarray(kappa)
    if np.any(kappa % 2):
        return 0.0
    N = len(kappa)
    return 2.0 * np.exp(sum(lgamma((k + 1) / 2.0) for k in kappa) - lgamma((kappa.sum() + N) / 2.0))


@lru_cache(maxsize=32)
def _landau_coefficients(N, d, gamma):
    """Derivative indices ``beta + e_i`` and the coefficient matrix pairing them."""
    odd = _indices(N, d - 1)
    odd = odd[odd.sum(axis=1) % 2 == 1]
    inv = _inv_factorials(odd)
    eye = np.eye(N, dtype=int)
    pairs = [(b, i) for b in range(len(odd)) for i in range(N)]
    deriv = np.array([odd[b] + eye[i] for b, i in pairs])
    C = np.zeros((len(pairs), len(pairs)))
    for p, (b, i) in enumerate(pairs):
        for q, (c, j) in enumerate(pairs):
            kap = odd[b] + odd[c]
            m = int(kap.sum())
            ang = (i == j) * _sphere_moment(kap) - _sphere_moment(kap + eye[i] + eye[j])
            if ang == 0.0:
                continue
            R = 2.0 ** (N + 1 + gamma) * gamma_fn((N + 2 + gamma + m) / 2.0)
            C[p, q] = R * ang * inv[b] * inv[c]
    # 1/2 from the form, 4 from the two odd Taylor sums
    return deriv, 2.0 * (2.0 * pi) ** (-N) * C


def landau_assemble(lp: LandauParams, basis: Basis) -> np.ndarray:
    """Matrix of ``D_L`` on ``basis``."""
    if basis.N != lp.N:
        raise InputError("basis and Landau parameters disagree on the dimension")
    deriv, C = _landau_coefficients(lp.N, basis.degree, float(lp.gamma))
    A = _bilinear(basis, deriv, C)
    return 0.5 * (A + A.T)


def landau_dirichlet_form(g: TrialFunction, lp: LandauParams) -> float:
    A = landau_assemble(lp, g.basis)
    return float(g.coeffs @ A @ g.coeffs)


# ---------------------------------------------------------------------------
# direct linearization oracle


def _sparse_poly(g: TrialFunction):
    """``h`` and ``grad h`` of ``g`` from its nonzero monomial coefficients."""
    basis = g.basis
    a = basis.coef @ g.coeffs
    keep = np.abs(a) > 1e-15 * max(np.abs(a).max(), 1e-300)
    exps, a = basis.exps[keep], a[keep]
    terms = []
    for k in range(g.N):
        sel = exps[:, k] > 0
        e = exps[sel].copy()
        c = a[sel] * e[:, k]
        e[:, k] -= 1
        terms.append((e, c))

    def h_and_grad(pts):
        h = _powers(pts, exps) @ a
        gr = np.stack([_powers(pts, e) @ c if len(c) else np.zeros(len(pts)) for e, c in terms], axis=1)
        return h, gr

    return h_and_grad


def _fields(hg, pts):
    """Columns ``[mu, F, d mu, d F]`` with ``F = mu^{1/2} g = mu h``."""
    N = pts.shape[1]
    h, gh = hg(pts)
    mu = (2.0 * pi) ** (-N / 2) * np.exp(-0.5 * np.sum(pts * pts, axis=1))
    F = mu * h
    dF = mu[:, None] * (gh - pts * h[:, None])
    dmu = -pts * mu[:, None]
    return np.column_stack([mu, F, dmu, dF]), gh


def landau_dirichlet_direct(g: TrialFunction, lp: LandauParams, n_radial: int = 16, order: int | None = None,
                            inner_degree: int = 25, n_inner: int = 8, panel: float = 1.0) -> float:
    """``<L_L g, g>`` from the operator definition.

    Integrating by parts once, ``<L_L g, g> = int d_i h J_i dv`` with

        J_i = (a*mu)_ij d_j F - F (a*d_j mu)_ij + d_j mu (a*F)_ij - mu (a*d_j F)_ij,

    ``F = mu^{1/2} g`` and ``(a*phi)(v) = int a(v - w) phi(w) dw``.  Each
    convolution runs over ``w = v - rho e`` with a Gauss-Jacobi rule for the
    ``rho^{N+1+gamma}`` factor near 0.
    """
    N, gam = lp.N, lp.gamma
    if g.N != N:
        raise InputError("dimension mismatch")
    order = order or 2 * g.basis.degree + 2
    grid = build_velocity_grid(N, "radial-spherical", order, radial=n_radial)
    V, WV = grid.nodes, grid.weights
    E, wE = sphere_rule(N, inner_degree)
    P = (np.eye(N)[None] - E[:, :, None] * E[:, None, :]).reshape(len(E), N * N)
    s = N + 1 + gam
    xj, wj = special.roots_jacobi(12, 0.0, s)
    r0, w0 = 0.5 * (xj + 1.0), wj * 0.5 ** (1.0 + s)
    hg = _sparse_poly(g)
    Fv, gh = _fields(hg, V)
    total = 0.0
    for k, v in enumerate(V):
        top = np.linalg.norm(v) + 10.0
        r1, w1 = composite_gauss(np.arange(1.0, top + panel, panel), n_inner)
        rho = np.concatenate([r0, r1])
        wr = np.concatenate([w0, w1 * r1**s])
        W = v[None, None, :] - rho[:, None, None] * E[None, :, :]
        Fw, _ = _fields(hg, W.reshape(-1, N))
        # sum over rho first, then against the projector on each direction
        S = np.einsum("r,red->ed", wr, Fw.reshape(len(rho), len(E), -1))
        C = ((wE[:, None] * S).T @ P).reshape(-1, N, N)  # C[c] = (a * column c)
        cm, cF = C[0], C[1]
        cdm, cdF = C[2 : 2 + N], C[2 + N :]  # [k, i, j] = (a * d_k phi)_ij
        mu_v, F_v, dmu_v, dF_v = Fv[k, 0], Fv[k, 1], Fv[k, 2 : 2 + N], Fv[k, 2 + N :]
        J = (cm @ dF_v - F_v * np.einsum("jij->i", cdm)
             + cF @ dmu_v - mu_v * np.einsum("jij->i", cdF))
        total += WV[k] * float(gh[k] @ J)
    return total


# ---------------------------------------------------------------------------
# sigma norm and coercivity


def sigma_gram(basis: Basis, gamma: float, grid=None) -> np.ndarray:
    """Gram matrix of the sigma norm on ``basis``."""
    grid = grid or default_grid(basis.N, basis.degree)
    pts = grid.nodes
    H = basis.eval_h(pts)
    G = basis.eval_grad_h(pts) - 0.5 * pts[:, None, :] * H[:, :, None]  # grad g / mu^{1/2}
    r = np.linalg.norm(pts, axis=1)
    vhat = np.divide(pts, r[:, None], out=np.zeros_like(pts), where=r[:, None] > 0)
    rad = np.einsum("nik,nk->ni", G, vhat)
    tan = G - rad[:, :, None] * vhat[:, None, :]
    br = bracket(pts)
    w = grid.mu_weights
    M = (rad.T @ ((w * br**gamma)[:, None] * rad)
         + np.einsum("nik,njk->ij", tan, (w * br ** (gamma + 2))[:, None, None] * tan)
         + H.T @ ((w * br ** (gamma + 2))[:, None] * H))
    return 0.5 * (M + M.T)


def landau_coercivity_estimate(lp: LandauParams, basis) -> CoercivityEstimate:
    """Minimum of ``D_L(g) / ||g - Pg||_sigma^2`` over the basis span."""
    basis = _as_basis(basis)
    if basis.degree < 3:
        raise DomainError("coercivity estimates need basis degree >= 3")
    A = landau_assemble(lp, basis)
    M = sigma_gram(basis, lp.gamma)
    lam, x = generalized_min(A, M, basis.n_invariants)
    inv = np.eye(basis.size)[:, : basis.n_invariants]
    resid = {"kernel_residual": float(np.abs(A @ inv).max()), "quad_error": 0.0}
    return CoercivityEstimate(lam, float(lp.gamma), basis.degree, resid, x)


def sigma_consequence_check(g: TrialFunction, lp: LandauParams, lam: float, tol: float = 1e-10):
    """``||g||_sigma^2 <= 2 (1 + C) D_L(g)`` with ``C = max(0, 1/(2 lam) - 1)``.

    Returns ``(lhs, rhs, holds)``; ``g`` should satisfy ``Pg = 0``.
    """
    if not lam > 0:
        raise DomainError("the fitted constant needs a positive coercivity estimate")
    C = max(0.0, 1.0 / (2.0 * lam) - 1.0)
    M = sigma_gram(g.basis, lp.gamma)
    lhs = float(g.coeffs @ M @ g.coeffs)
    rhs = 2.0 * (1.0 + C) * landau_dirichlet_form(g, lp)
    return lhs, rhs, lhs <= rhs * (1.0 + tol) + tol


# ---------------------------------------------------------------------------
# H^1_gamma(mu) chain


@dataclass
class ChainReport:
    """Values of the four links; ``passed`` maps link name to bool."""

    gamma: float
    h1_norm: float
    expanded: float
    cross: float
    cross_ibp: float
    lower_bound: float
    combined_constant: float
    combined_rhs: float
    passed: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


def mcoerc_chain_check(g: TrialFunction, gamma: float, grid=None,
                       tol_identity: float = 1e-8, tol_ibp: float = 1e-6) -> ChainReport:
    """Verify the inequality chain translating the ``H^1_gamma(mu)`` estimate to ``g``.

    (i)   ``||mu^{-1/2} g||^2_{H^1_gamma(mu)}`` equals its expansion with the cross term
    (ii)  the cross term equals ``-1/2 int div(v <v>^gamma) g^2``
    (iii) the norm dominates ``1/4 Q - (N + |gamma|)/2 int <v>^gamma g^2``
    (iv)  the norm dominates ``Q / (4 (1 + (N + |gamma|)/2))``

    with ``Q = int <v>^gamma |grad g|^2 + <v>^{gamma+2} g^2``.
    """
    N = g.N
    grid = grid or default_grid(N, g.basis.degree)
    pts, w = grid.nodes, grid.mu_weights  # integrals of g-level products divided by mu
    h = g.h(pts)
    gh = g.grad_h(pts)
    gg = gh - 0.5 * pts * h[:, None]  # grad g / mu^{1/2}
    br = bracket(pts)
    bg = br**gamma
    I = lambda f: float(weighted_sum(w, f))
    h1 = I(bg * (np.sum(gh * gh, axis=1) + h * h))
    grad2 = I(bg * np.sum(gg * gg, axis=1))
    v2g2 = I(bg * np.sum(pts * pts, axis=1) * h * h)
    cross = I(bg * np.sum(pts * gg, axis=1) * h)
    l2 = I(bg * h * h)
    expanded = grad2 + 0.25 * v2g2 + cross + l2
    cross_ibp = -0.5 * I(divergence_weight(pts, gamma) * h * h)
    Q = grad2 + I(br ** (gamma + 2) * h * h)
    t = 0.5 * (N + abs(gamma))
    lower = 0.25 * Q - t * l2
    C = 0.25 / (1.0 + t)
    scale = max(h1, 1e-300)
    err_i = abs(h1 - expanded) / scale
    err_ii = abs(cross - cross_ibp) / max(abs(cross), I(bg * np.abs(np.sum(pts * gg, axis=1) * h)), 1e-300)
    slack = 1e-12 * scale
    passed = {
        "i": err_i <= tol_identity,
        "ii": err_ii <= tol_ibp,
        "iii": h1 - lower >= -slack,
        "iv": h1 - C * Q >= -slack,
    }
    return ChainReport(gamma, h1, expanded, cross, cross_ibp, lower, C, C * Q, passed,
                       {"i": err_i, "ii": err_ii, "iii": h1 - lower, "iv": h1 - C * Q})
