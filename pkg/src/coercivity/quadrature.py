"""Integration grids for velocity space and for singular angular integrals.

Two velocity grids are provided, both integrating ``p(v) * mu(v)`` exactly
for polynomials ``p`` up to the requested order:

* ``tensor-hermite``: tensor product of Gauss-Hermite rules.
* ``radial-spherical``: generalized Gauss-Laguerre in ``|v|`` times an exact
  product rule on the sphere.  No node sits at the origin.

The angular grid integrates over ``sigma`` in S^{N-1} written as polar angle
``theta`` (measured from a pole) and an azimuth.  Its ``theta`` nodes are
graded geometrically toward ``theta = 0`` and the innermost cell uses a
Gauss-Jacobi rule for the ``theta**(1 - alpha)`` endpoint behaviour typical of
non-cutoff Dirichlet-form integrands.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gamma as gamma_fn, pi, sqrt
from typing import Callable

import numpy as np
from scipy import special

from .errors import ConstructionError, InputError, IntegrandError

__all__ = [
    "VelocityGrid",
    "AngularGrid",
    "build_velocity_grid",
    "build_angular_grid",
    "integrate",
    "gauss_legendre",
    "composite_gauss",
    "jacobi_left",
    "sphere_rule",
    "sphere_area",
    "gaussian_moment",
    "weighted_sum",
]

VELOCITY_KINDS = ("tensor-hermite", "radial-spherical")


def sphere_area(N: int) -> float:
    """|S^{N-1}|, the surface measure of the unit sphere in R^N."""
    return 2.0 * pi ** (N / 2) / gamma_fn(N / 2)


def gaussian_moment(kappa) -> float:
    """Exact ``int v^kappa mu(v) dv`` for the standard Maxwellian."""
    out = 1.0
    for k in kappa:
        if k % 2:
            return 0.0
        out *= float(special.factorial2(k - 1, exact=True)) if k > 0 else 1.0
    return out


def weighted_sum(weights, values, axis=-1):
    """Deterministic weighted reduction (numpy's pairwise summation)."""
    return np.sum(np.multiply(weights, values), axis=axis)


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leg(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def composite_gauss(edges, n: int):
    """Gauss-Legendre on every panel of ``edges`` (last axis).

    ``edges`` may carry leading batch dimensions; zero-width panels are
    allowed and contribute nothing.  Returns ``(nodes, weights)`` with shape
    ``edges.shape[:-1] + ((m - 1) * n,)``.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _leg(n)
    lo = edges[..., :-1, None]
    half = 0.5 * (edges[..., 1:, None] - lo)
    nodes = lo + half * (x + 1.0)
    weights = half * w
    shape = edges.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def jacobi_left(n: int, h: float, s: float):
    """Rule on ``[0, h]`` exact for ``theta**s * poly(theta)`` integrands.

    The Jacobi weight is divided back out, so the rule is applied to the
    plain integrand.
    """
    if s <= -1.0:
        raise InputError(f"endpoint exponent must exceed -1, got {s}")
    x, w = special.roots_jacobi(n, 0.0, s)
    t = 0.5 * h * (x + 1.0)
    wt = w * (0.5 * h) ** (1.0 + s) / t**s
    return t, wt


def sphere_rule(N: int, degree: int):
    """Product rule on S^{N-1} exact for polynomials of total degree <= degree.

    Returns ``(points, weights)`` with ``points`` of shape (m, N).
    """
    if N == 2:
        m = degree + 1
        phi = 2.0 * pi * (np.arange(m) + 0.5) / m
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return pts, np.full(m, 2.0 * pi / m)
    if N == 3:
        nz = degree // 2 + 1
        z, wz = np.polynomial.legendre.leggauss(nz)
        m = degree + 1
        phi = 2.0 * pi * (np.arange(m) + 0.5) / m
        s = np.sqrt(1.0 - z**2)
        pts = np.stack(
            [
                (s[:, None] * np.cos(phi)[None, :]).ravel(),
                (s[:, None] * np.sin(phi)[None, :]).ravel(),
                np.repeat(z, m),
            ],
            axis=-1,
        )
        w = np.repeat(wz, m) * (2.0 * pi / m)
        return pts, w
    raise InputError(f"dimension must be 2 or 3, got {N}")


@dataclass(frozen=True)
class VelocityGrid:
    """Nodes and weights in R^N.

    ``mu_weights`` integrate ``f * mu``; ``weights`` integrate ``F`` directly
    (they are ``mu_weights / mu(nodes)``).
    """

    nodes: np.ndarray
    weights: np.ndarray
    mu_weights: np.ndarray
    kind: str
    order: int
    radial: int | None = None

    @property
    def N(self) -> int:
        return self.nodes.shape[1]

    def __len__(self):
        return self.nodes.shape[0]

    def refine(self) -> "VelocityGrid":
        radial = None if self.radial is None else self.radial + max(4, self.radial // 2)
        return build_velocity_grid(self.N, self.kind, self.order + 4, radial=radial)

    def integrate_mu(self, values) -> float:
        return float(weighted_sum(self.mu_weights, values))


def _maxwellian(v):
    N = v.shape[-1]
    return (2.0 * pi) ** (-N / 2) * np.exp(-0.5 * np.sum(v * v, axis=-1))


def _exactness_residual(grid: VelocityGrid) -> float:
    from itertools import product

    worst = 0.0
    for kappa in product(range(grid.order + 1), repeat=grid.N):
        if sum(kappa) > grid.order:
            continue
        vals = np.prod(grid.nodes ** np.asarray(kappa), axis=1)
        approx = weighted_sum(grid.mu_weights, vals)
        exact = gaussian_moment(kappa)
        # scale by the L^2(mu) size of the monomial so odd moments are judged fairly
        scale = sqrt(gaussian_moment(tuple(2 * k for k in kappa)))
        worst = max(worst, abs(approx - exact) / scale)
    return worst


def build_velocity_grid(
    N: int, kind: str = "radial-spherical", order: int = 12, radial: int | None = None
) -> VelocityGrid:
    """Build a velocity grid exact for ``poly * mu`` up to ``order``.

    ``radial`` oversamples the radial rule of the radial-spherical grid (it
    helps non-polynomial weights such as ``<v>**w``); it is ignored for the
    tensor grid.
    """
    if N not in (2, 3):
        raise InputError(f"dimension must be 2 or 3, got {N}")
    if order < 2:
        raise InputError(f"order must be >= 2, got {order}")
    if kind == "tensor-hermite":
        n = order // 2 + 1
        x, w = np.polynomial.hermite_e.hermegauss(n)
        w = w / sqrt(2.0 * pi)
        mesh = np.meshgrid(*([x] * N), indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        wm = np.meshgrid(*([w] * N), indexing="ij")
        mu_w = np.prod(np.stack([m.ravel() for m in wm], axis=-1), axis=1)
        radial = None
    elif kind == "radial-spherical":
        nr = max(order // 2 + 1, radial or 0)
        radial = nr
        a = (N - 2) / 2.0
        x, wx = special.roots_genlaguerre(nr, a)
        r = np.sqrt(2.0 * x)
        # int_0^inf r^{N-1} e^{-r^2/2} f dr = 2^{(N-2)/2} int x^a e^{-x} f dx
        wr = wx * 2.0 ** ((N - 2) / 2.0) * (2.0 * pi) ** (-N / 2)
        pts, ws = sphere_rule(N, order + 1)
        nodes = (r[:, None, None] * pts[None, :, :]).reshape(-1, N)
        mu_w = (wr[:, None] * ws[None, :]).ravel()
    else:
        raise InputError(f"unknown velocity grid kind {kind!r}; expected one of {VELOCITY_KINDS}")
    mu = _maxwellian(nodes)
    grid = VelocityGrid(nodes, mu_w / mu, mu_w, kind, order, radial)
    resid = _exactness_residual(grid)
    if resid > 1e-10:
        raise ConstructionError(f"{kind} grid of order {order} failed self-test (residual {resid:.3e})")
    return grid


@dataclass(frozen=True)
class AngularGrid:
    """Polar/azimuthal rule on S^{N-1} graded toward ``theta = 0``.

    ``integrate_sigma(F)`` approximates ``int F dsigma`` for ``F`` given on the
    ``(theta, azimuth)`` mesh.  For N=2 the azimuth is the two-point set
    {+1, -1} (side of the pole) with unit weights.
    """

    N: int
    alpha: float
    theta: np.ndarray
    theta_weights: np.ndarray
    azimuth: np.ndarray
    azimuth_weights: np.ndarray
    cells: int
    order_per_cell: int
    ratio: float
    theta_max: float

    @property
    def polar_weights(self) -> np.ndarray:
        """``dtheta`` weights times the ``sin^{N-2}(theta)`` Jacobian."""
        return self.theta_weights * np.sin(self.theta) ** (self.N - 2)

    def integrate_sigma(self, F) -> float:
        F = np.asarray(F)
        return float(np.sum(self.polar_weights[:, None] * self.azimuth_weights[None, :] * F))

    def refine(self) -> "AngularGrid":
        return build_angular_grid(
            self.N,
            self.alpha,
            cells=self.cells + 4,
            order_per_cell=self.order_per_cell + 4,
            ratio=self.ratio,
            theta_max=self.theta_max,
            azimuth=len(self.azimuth) + 4 if self.N == 3 else None,
        )


def graded_theta_rule(theta_max: float, alpha: float, cells: int = 20, order: int = 8, ratio: float = 0.5):
    """``theta`` nodes/weights on ``(0, theta_max]`` with geometric grading.

    The innermost cell is Gauss-Jacobi for an integrand ``~ theta**(1-alpha)``.
    """
    if not 0.0 < ratio < 1.0:
        raise InputError(f"grading ratio must lie in (0, 1), got {ratio}")
    if cells < 1:
        raise InputError("need at least one cell")
    edges = theta_max * ratio ** np.arange(cells - 1, -1, -1, dtype=float)
    t0, w0 = jacobi_left(order, edges[0], 1.0 - alpha)
    if cells > 1:
        t1, w1 = composite_gauss(edges, order)
        return np.concatenate([t0, t1]), np.concatenate([w0, w1])
    return t0, w0


def build_angular_grid(
    N: int,
    alpha: float,
    cells: int = 20,
    order_per_cell: int = 8,
    ratio: float = 0.5,
    theta_max: float = pi,
    azimuth: int | None = None,
) -> AngularGrid:
    if N not in (2, 3):
        raise InputError(f"dimension must be 2 or 3, got {N}")
    if not 0.0 <= alpha < 2.0:
        raise InputError(f"alpha must lie in [0, 2), got {alpha}")
    theta, wt = graded_theta_rule(theta_max, alpha, cells, order_per_cell, ratio)
    if N == 3:
        m = azimuth or 16
        psi = 2.0 * pi * np.arange(m) / m
        wpsi = np.full(m, 2.0 * pi / m)
    else:
        psi = np.array([1.0, -1.0])
        wpsi = np.ones(2)
    return AngularGrid(N, alpha, theta, wt, psi, wpsi, cells, order_per_cell, ratio, theta_max)


def integrate(f: Callable, grid, refined=None):
    """Integrate ``f`` on ``grid``; return ``(value, error_estimate)``.

    For a :class:`VelocityGrid`, ``f(nodes)`` is integrated against ``dv``.
    For an :class:`AngularGrid`, ``f(theta, azimuth)`` receives broadcastable
    arrays and is integrated against ``dsigma``.  The error estimate is the
    difference with the same integral on ``refined`` (``grid.refine()`` when
    not given).
    """
    refined = grid.refine() if refined is None else refined
    return _integrate_once(f, grid), abs(_integrate_once(f, grid) - _integrate_once(f, refined))


def _integrate_once(f, grid) -> float:
    if isinstance(grid, VelocityGrid):
        vals = np.asarray(f(grid.nodes), dtype=float)
        _check_finite(vals, grid.nodes)
        return float(weighted_sum(grid.weights, vals))
    if isinstance(grid, AngularGrid):
        vals = np.asarray(f(grid.theta[:, None], grid.azimuth[None, :]), dtype=float)
        vals = np.broadcast_to(vals, (len(grid.theta), len(grid.azimuth)))
        _check_finite(vals, None, grid)
        return grid.integrate_sigma(vals)
    raise InputError(f"unsupported grid type {type(grid).__name__}")


def _check_finite(vals, nodes, agrid=None):
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.argwhere(bad)[0]
        if nodes is not None:
            node = nodes[idx[0]]
        else:
            node = (float(agrid.theta[idx[0]]), float(agrid.azimuth[idx[1]]))
        raise IntegrandError(f"integrand is not finite at node {node}", node=node)
