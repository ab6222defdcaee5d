"""Trial spaces, projections and weighted norms.

Functions are represented in the fluctuation form ``g = h * mu^{1/2}`` with
``h`` a polynomial of total degree at most ``d``.  The basis is the
Gram-Schmidt orthonormalization (in plain L^2 for ``g``, equivalently in
L^2(mu) for ``h``) of the monomials taken in the order

    1, v_1, ..., v_N, |v|^2, remaining quadratics, cubics, ..., degree d

so the first ``2 + N`` basis functions span the collisional invariants
``{1, v, |v|^2} mu^{1/2}``.  Gram matrices of polynomials against ``mu`` are
computed exactly from Gaussian moments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import pi
from typing import Callable

import numpy as np
from scipy import linalg, special

from .errors import DomainError, InputError
from .kernels import bracket
from .quadrature import (
    VelocityGrid,
    build_velocity_grid,
    gaussian_moment,
    sphere_rule,
    weighted_sum,
)

__all__ = [
    "Basis",
    "BasisSpec",
    "TrialFunction",
    "MaxwellianParams",
    "build_basis",
    "eval_maxwellian",
    "moments",
    "project_P",
    "project_Phat",
    "weighted_norm",
    "sigma_norm",
    "h1_gamma_mu_norm",
    "divergence_weight",
    "frac_seminorm",
    "gram_matrix",
    "default_grid",
    "multi_indices",
]


def multi_indices(N: int, degree: int):
    """All exponent tuples of total degree ``degree``, in lexicographic descending order."""
    out = [k for k in product(range(degree, -1, -1), repeat=N) if sum(k) == degree]
    return out


def _generating_set(N: int, d: int):
    """Generating polynomials as dicts ``{exponent: coefficient}``."""
    gens = [{(0,) * N: 1.0}]
    gens += [{tuple(int(j == i) for j in range(N)): 1.0} for i in range(N)]
    gens.append({tuple(2 * int(j == i) for j in range(N)): 1.0 for i in range(N)})
    last_square = tuple(2 * int(j == N - 1) for j in range(N))
    gens += [{k: 1.0} for k in multi_indices(N, 2) if k != last_square]
    for deg in range(3, d + 1):
        gens += [{k: 1.0} for k in multi_indices(N, deg)]
    return gens


@dataclass(frozen=True)
class BasisSpec:
    N: int = 3
    degree: int = 6

    @property
    def size(self) -> int:
        return int(special.comb(self.N + self.degree, self.N, exact=True))


class Basis:
    """Orthonormal polynomial-times-``mu^{1/2}`` basis.

    ``coef[:, i]`` holds the monomial coefficients of ``h_i`` over ``exps``.
    """

    def __init__(self, spec: BasisSpec):
        if spec.N not in (2, 3):
            raise InputError(f"dimension must be 2 or 3, got {spec.N}")
        if spec.degree < 2:
            raise DomainError(f"basis degree must be >= 2, got {spec.degree}")
        self.spec = spec
        self.N = spec.N
        self.degree = spec.degree
        exps = []
        for deg in range(spec.degree + 1):
            exps += multi_indices(spec.N, deg)
        self.exps = np.array(exps, dtype=int)
        self._index = {tuple(k): i for i, k in enumerate(exps)}
        gens = _generating_set(spec.N, spec.degree)
        G = np.zeros((len(exps), len(gens)))
        for j, gdict in enumerate(gens):
            for k, c in gdict.items():
                G[self._index[k], j] += c
        self.generators = G
        mom = self.monomial_gram()
        gram = G.T @ mom @ G
        L = linalg.cholesky(gram, lower=True)
        # h_i = sum_j G[:, j] (L^{-T})[j, i]
        self.coef = G @ linalg.solve_triangular(L, np.eye(len(gens)), lower=True).T
        self.n_invariants = 2 + spec.N

    @property
    def size(self) -> int:
        return self.coef.shape[1]

    def monomial_gram(self) -> np.ndarray:
        """Exact ``int v^a v^b mu dv`` over all monomial pairs."""
        M = len(self.exps)
        out = np.empty((M, M))
        for i in range(M):
            for j in range(i, M):
                out[i, j] = out[j, i] = gaussian_moment(self.exps[i] + self.exps[j])
        return out

    def monomials(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.ones((pts.shape[0], len(self.exps)))
        for k in range(self.N):
            pw = pts[:, k : k + 1] ** np.arange(self.degree + 1)
            out *= pw[:, self.exps[:, k]]
        return out

    def derivative_operator(self, beta) -> np.ndarray:
        """Matrix ``D`` with ``monomials(x) @ D @ c == d^beta (monomials(x) @ c)``."""
        beta = np.asarray(beta, dtype=int)
        M = len(self.exps)
        D = np.zeros((M, M))
        for j, k in enumerate(self.exps):
            rest = k - beta
            if np.any(rest < 0):
                continue
            fac = np.prod([special.poch(r + 1, b) for r, b in zip(rest, beta)])
            D[self._index[tuple(rest)], j] = fac
        return D

    def eval_h(self, points, beta=None) -> np.ndarray:
        """``(n_points, size)`` values of ``d^beta h_i``."""
        C = self.coef if beta is None else self.derivative_operator(beta) @ self.coef
        return self.monomials(points) @ C

    def eval_grad_h(self, points) -> np.ndarray:
        """``(n_points, size, N)`` gradients of ``h_i``."""
        P = self.monomials(points)
        cols = []
        for k in range(self.N):
            e = np.zeros(self.N, dtype=int)
            e[k] = 1
            cols.append(P @ (self.derivative_operator(e) @ self.coef))
        return np.stack(cols, axis=-1)

    def eval_g(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self.eval_h(pts) * _sqrt_mu(pts)[:, None]

    def eval_grad_g(self, points) -> np.ndarray:
        """``grad g_i = (grad h_i - v h_i / 2) mu^{1/2}``."""
        pts = np.asarray(points, dtype=float)
        gh = self.eval_grad_h(pts)
        h = self.eval_h(pts)
        return (gh - 0.5 * pts[:, None, :] * h[:, :, None]) * _sqrt_mu(pts)[:, None, None]

    def coefficients_of(self, terms: dict) -> np.ndarray:
        """Basis coefficients of the polynomial ``h = sum c v^k`` given as ``{k: c}``."""
        a = np.zeros(len(self.exps))
        for k, c in terms.items():
            k = tuple(int(x) for x in k)
            if len(k) != self.N or sum(k) > self.degree:
                raise InputError(f"monomial {k} is not in the degree-{self.degree} space")
            a[self._index[k]] += c
        return np.linalg.solve(self.coef, a)


_BASIS_CACHE: dict[BasisSpec, Basis] = {}


def build_basis(N: int = 3, degree: int = 6) -> Basis:
    spec = BasisSpec(N, degree)
    if spec not in _BASIS_CACHE:
        _BASIS_CACHE[spec] = Basis(spec)
    return _BASIS_CACHE[spec]


def _sqrt_mu(points):
    N = points.shape[-1]
    return (2.0 * pi) ** (-N / 4) * np.exp(-0.25 * np.sum(points * points, axis=-1))


@dataclass
class TrialFunction:
    """``g = sum_i coeffs[i] h_i mu^{1/2}``.

    The same coefficients describe ``h = mu^{-1/2} g`` in L^2(mu), which is
    how the two linearizations correspond.
    """

    basis: Basis
    coeffs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.basis.size,):
            raise InputError(f"expected {self.basis.size} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InputError("coefficients must be finite")
        self.coeffs = c

    @classmethod
    def from_polynomial(cls, basis: Basis, terms: dict) -> "TrialFunction":
        return cls(basis, basis.coefficients_of(terms))

    @property
    def N(self) -> int:
        return self.basis.N

    def _eval(self, key, points, fn):
        # one cached sample set per quantity; the points array is held so
        # identity comparison stays valid
        hit = self._cache.get(key)
        if hit is not None and hit[0] is points:
            return hit[1]
        val = fn(points)
        self._cache[key] = (points, val)
        return val

    def h(self, points) -> np.ndarray:
        return self._eval("h", points, lambda p: self.basis.eval_h(p) @ self.coeffs)

    def g(self, points) -> np.ndarray:
        return self._eval("g", points, lambda p: self.basis.eval_g(p) @ self.coeffs)

    def grad_h(self, points) -> np.ndarray:
        return self._eval("gh", points, lambda p: np.einsum("nik,i->nk", self.basis.eval_grad_h(p), self.coeffs))

    def grad_g(self, points) -> np.ndarray:
        return self._eval("gg", points, lambda p: np.einsum("nik,i->nk", self.basis.eval_grad_g(p), self.coeffs))

    def __call__(self, points):
        return self.g(np.asarray(points, dtype=float))

    def __add__(self, other: "TrialFunction") -> "TrialFunction":
        return TrialFunction(self.basis, self.coeffs + other.coeffs)

    def __mul__(self, c: float) -> "TrialFunction":
        return TrialFunction(self.basis, c * self.coeffs)

    __rmul__ = __mul__


@dataclass(frozen=True)
class MaxwellianParams:
    rho: float = 1.0
    u: tuple = (0.0, 0.0, 0.0)
    T: float = 1.0

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"density must be positive, got {self.rho}")
        if not self.T > 0:
            raise DomainError(f"temperature must be positive, got {self.T}")


def eval_maxwellian(v, mp: MaxwellianParams = MaxwellianParams()):
    v = np.asarray(v, dtype=float)
    u = np.asarray(mp.u, dtype=float)
    N = v.shape[-1]
    if u.shape != (N,):
        raise InputError("mean velocity and v must share one dimension")
    d2 = np.sum((v - u) ** 2, axis=-1)
    out = mp.rho * (2.0 * pi * mp.T) ** (-N / 2) * np.exp(-d2 / (2.0 * mp.T))
    return out if np.ndim(out) else float(out)


def default_grid(N: int, degree: int = 6, radial: int = 64) -> VelocityGrid:
    """Radial-spherical grid used for weighted Gram matrices of the basis."""
    return _grid(N, 2 * degree + 4, radial)


_GRID_CACHE: dict = {}


def _grid(N, order, radial, kind="radial-spherical"):
    key = (N, order, radial, kind)
    if key not in _GRID_CACHE:
        _GRID_CACHE[key] = build_velocity_grid(N, kind, order, radial=radial)
    return _GRID_CACHE[key]


def moments(f, grid: VelocityGrid | None = None, N: int = 3, tol: float = 1e-12):
    """Density, mean velocity and temperature of a density sampled on ``grid``.

    ``f`` is either an array of values at ``grid.nodes`` or a callable.
    """
    if grid is None:
        grid = _grid(N, 40, None, "tensor-hermite")
    vals = f(grid.nodes) if callable(f) else np.asarray(f, dtype=float)
    if vals.shape != (len(grid),):
        raise InputError("density values must match the grid nodes")
    rho = float(weighted_sum(grid.weights, vals))
    if rho <= tol:
        raise DomainError(f"density {rho!r} is degenerate")
    u = np.array([weighted_sum(grid.weights, vals * grid.nodes[:, k]) for k in range(grid.N)]) / rho
    d2 = np.sum((grid.nodes - u) ** 2, axis=1)
    T = float(weighted_sum(grid.weights, vals * d2)) / (grid.N * rho)
    return rho, u, T


def project_P(g: TrialFunction) -> TrialFunction:
    """L^2 projection onto ``span{1, v, |v|^2} mu^{1/2}``."""
    c = np.zeros_like(g.coeffs)
    m = g.basis.n_invariants
    c[:m] = g.coeffs[:m]
    return TrialFunction(g.basis, c)


def project_Phat(h: TrialFunction) -> TrialFunction:
    """L^2(mu) projection of ``h`` onto ``span{1, v, |v|^2}``.

    Coefficients are shared with the ``g`` picture, so this is ``project_P``
    read through ``h = mu^{-1/2} g``.
    """
    return project_P(h)


def gram_matrix(basis: Basis, weight: Callable | None = None, grid: VelocityGrid | None = None) -> np.ndarray:
    """``int g_i g_j w(v) dv``; identity when ``weight`` is None."""
    if weight is None:
        return np.eye(basis.size)
    grid = grid or default_grid(basis.N, basis.degree)
    H = basis.eval_h(grid.nodes)
    w = grid.mu_weights * weight(grid.nodes)
    return H.T @ (w[:, None] * H)


def weighted_norm(g: TrialFunction, w: float, grid: VelocityGrid | None = None) -> float:
    """``|| g <v>^{w/2} ||_{L^2}``."""
    grid = grid or default_grid(g.N, g.basis.degree)
    h = g.h(grid.nodes)
    return float(np.sqrt(weighted_sum(grid.mu_weights, h * h * bracket(grid.nodes) ** w)))


def _radial_split(grid, vec):
    r = np.linalg.norm(grid.nodes, axis=1)
    vhat = np.divide(grid.nodes, r[:, None], out=np.zeros_like(grid.nodes), where=r[:, None] > 0)
    rad = np.sum(vhat * vec, axis=1)
    return rad, np.sum(vec * vec, axis=1) - rad * rad


def sigma_norm(g: TrialFunction, gamma: float, grid: VelocityGrid | None = None) -> float:
    """Anisotropic norm with radial gradient weight ``<v>^gamma`` and
    tangential gradient and zeroth-order weights ``<v>^{gamma+2}``.

    The radial projector is taken to be zero at ``v = 0``.
    """
    grid = grid or default_grid(g.N, g.basis.degree)
    return float(np.sqrt(_sigma_terms(g, gamma, grid).sum()))


def _sigma_terms(g, gamma, grid):
    # g-level quantities carried as mu^{1/2} times polynomial-like factors
    h = g.h(grid.nodes)
    grad = g.grad_h(grid.nodes) - 0.5 * grid.nodes * h[:, None]
    rad2, tan2 = _radial_split(grid, grad)
    rad2 = rad2 * rad2
    br = bracket(grid.nodes)
    return np.array(
        [
            weighted_sum(grid.mu_weights, br**gamma * rad2),
            weighted_sum(grid.mu_weights, br ** (gamma + 2) * tan2),
            weighted_sum(grid.mu_weights, br ** (gamma + 2) * h * h),
        ]
    )


def h1_gamma_mu_norm(h: TrialFunction, gamma: float = 0.0, grid: VelocityGrid | None = None) -> float:
    """``( int <v>^gamma (|grad h|^2 + h^2) mu dv )^{1/2}``."""
    grid = grid or default_grid(h.N, h.basis.degree)
    hv = h.h(grid.nodes)
    gh = h.grad_h(grid.nodes)
    val = weighted_sum(grid.mu_weights, bracket(grid.nodes) ** gamma * (np.sum(gh * gh, axis=1) + hv * hv))
    return float(np.sqrt(val))


def divergence_weight(v, gamma: float):
    """``div(v <v>^gamma) = <v>^gamma (N + gamma |v|^2 / <v>^2)``."""
    v = np.asarray(v, dtype=float)
    N = v.shape[-1]
    r2 = np.sum(v * v, axis=-1)
    out = (1.0 + r2) ** (gamma / 2) * (N + gamma * r2 / (1.0 + r2))
    return out if np.ndim(out) else float(out)


def frac_seminorm(
    g,
    alpha: float,
    R: float = 3.0,
    include_l2: bool = True,
    N: int | None = None,
    n_radial: int = 12,
    sphere_degree: int = 13,
    n_inner: int = 12,
) -> float:
    """Local ``H^{alpha/2}`` norm on the ball ``|v| < R``.

    Gagliardo double integral ``int_B int_B |g(v)-g(w)|^2 / |v-w|^{N+alpha}``
    plus (optionally) ``int_B g^2``; the square root is returned.  The inner
    integral runs along rays ``w = v + r e`` up to the sphere, with a
    Gauss-Jacobi rule absorbing the ``r^{1-alpha}`` endpoint behaviour.
    ``g`` is a :class:`TrialFunction` or any callable on ``(n, N)`` arrays.
    """
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    if isinstance(g, TrialFunction):
        N = g.N
    elif N is None:
        raise InputError("N is required when g is a plain callable")
    # outer rule on the ball
    x, wx = special.roots_jacobi(n_radial, 0.0, N - 1.0)
    r_out = 0.5 * R * (x + 1.0)
    w_out = wx * (0.5 * R) ** N
    dirs, wd = sphere_rule(N, sphere_degree)
    V = (r_out[:, None, None] * dirs[None, :, :]).reshape(-1, N)
    WV = (w_out[:, None] * wd[None, :]).ravel()
    gv = np.asarray(g(V), dtype=float)
    # rays from every V in every direction
    ve = V @ dirs.T
    ell = -ve + np.sqrt(np.maximum(ve * ve - np.sum(V * V, axis=1)[:, None] + R * R, 0.0))
    t, wt = special.roots_jacobi(n_inner, 0.0, 1.0 - alpha)
    t = 0.5 * (t + 1.0)
    wt = wt * 0.5 ** (2.0 - alpha)
    semi = 0.0
    for a in range(len(V)):
        rr = ell[a][:, None] * t[None, :]
        W = V[a] + rr[:, :, None] * dirs[:, None, :]
        diff = np.asarray(g(W.reshape(-1, N)), dtype=float).reshape(rr.shape) - gv[a]
        # |diff|^2 r^{-1-alpha} dr = (|diff|^2 / r^2) r^{1-alpha} dr
        inner = np.sum(wt[None, :] * diff * diff / (t[None, :] ** 2), axis=1) * ell[a] ** (-alpha)
        semi += WV[a] * float(np.dot(wd, inner))
    total = semi
    if include_l2:
        total += float(np.dot(WV, gv * gv))
    return float(np.sqrt(total))
