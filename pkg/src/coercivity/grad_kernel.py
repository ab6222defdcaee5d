"""Gain kernel ``k_q`` of variable-hard-sphere kernels and its truncations.

For ``B_q = |v - v*|^q`` (no angular dependence) the gain operator is

    K+ g(v) = 2 int g(v') mu^{1/2}(v'*) mu^{1/2}(v*) B_q dv* dsigma
            = int k_q(v, v') g(v') dv'

with, writing ``W = v' - v``, ``r = |W|``, ``omega = W / r``,

    k_q = 2^N / (r (2 pi)^{N/2}) exp(-r^2/8 - |W + 2 (v.omega) omega|^2 / 8)
          * int_{omega^perp} |W + z|^{q-(N-2)} exp(-|z + v_perp|^2 / 2) dz.

Because ``z`` is orthogonal to ``W``, ``|W + z|^2 = r^2 + |z|^2`` and the
cross-section integral depends only on ``r`` and ``c = |v_perp|``.  In polar
coordinates on ``omega^perp`` it becomes a one-dimensional integral in
``rho = |z|`` (a modified Bessel function appears for N = 3).

Row integrals ``int k_q(v, v') F(v') dv'`` are computed in spherical
coordinates ``W = r (cos(phi) vhat + sin(phi) e)`` centred at ``v``, so the
``1/r`` factor is absorbed by the Jacobian.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi, tan
from typing import Callable

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

from .errors import AccuracyError, DomainError, InputError, SingularityError
from .geometry import as_velocity
from .kernels import KernelParams, cap_measure
from .quadrature import composite_gauss, sphere_area, sphere_rule

__all__ = [
    "VhsParams",
    "KhatSplit",
    "nu_q",
    "eval_kq",
    "kq_row_moment",
    "kq_row_integral",
    "eval_khat",
    "khat_row_integrals",
    "khat_remainder_sup",
    "khat_hilbert_schmidt",
    "nu_hat",
    "kplus_kernel",
    "kplus_direct",
    "kc_apply",
]

_CHUNK = 4096


@dataclass(frozen=True)
class VhsParams:
    """Variable-hard-sphere kernel ``|v - v*|^q`` in dimension ``N``."""

    q: float
    N: int = 3

    def __post_init__(self):
        if self.N not in (2, 3):
            raise InputError(f"dimension must be 2 or 3, got {self.N}")
        if not self.q > -self.N:
            raise DomainError(f"q must exceed -N = {-self.N}, got {self.q}")


@dataclass(frozen=True)
class KhatSplit:
    """Parameters of the truncated gain kernel and its ``eps`` split."""

    eps: float
    gamma: float = 0.0
    alpha: float = 0.5
    theta0: float = pi
    N: int = 3

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps must lie in (0, 1), got {self.eps}")
        KernelParams(self.N, self.gamma, self.alpha, 1.0, self.theta0)

    @property
    def q(self) -> float:
        return self.gamma + self.alpha + (self.N - 1)


def _require_kq_domain(q):
    if not q > -1.0:
        raise DomainError(f"the gain kernel formula needs q > -1, got {q}")


# ---------------------------------------------------------------------------
# multiplier


def _sphere_avg_mu(r, vn, N):
    """Average of ``mu(v - r e)`` over unit vectors ``e``, for ``|v| = vn``."""
    x = r * vn
    if N == 3:
        # sinh(x)/x written stably
        ratio = np.where(x > 1e-8, -np.expm1(-2.0 * x) / np.where(x > 1e-8, 2.0 * x, 1.0), 1.0 - x)
        return (2.0 * pi) ** -1.5 * np.exp(-0.5 * (r - vn) ** 2) * ratio
    return (2.0 * pi) ** -1.0 * np.exp(-0.5 * (r - vn) ** 2) * special.i0e(x)


def _radial_convolution(weight: Callable, vn: float, N: int, breaks=()):
    """``int_{R^N} weight(|u|) mu(v - u) du`` for ``|v| = vn``."""
    area = sphere_area(N)
    hi = vn + 40.0
    pts = sorted({b for b in (vn, *breaks) if 0.0 < b < hi})
    f = lambda r: area * r ** (N - 1) * weight(r) * _sphere_avg_mu(r, vn, N)
    val, err = sp_integrate.quad(f, 0.0, hi, points=pts or None, limit=400, epsabs=0.0, epsrel=1e-11)
    return val, err


def nu_q(v, p: VhsParams) -> float:
    """Collision frequency ``|S^{N-1}| (|.|^q * mu)(v)``."""
    v = as_velocity(v, "v")
    if v.shape[0] != p.N:
        raise InputError("velocity dimension does not match the kernel")
    area = sphere_area(p.N)
    if p.q == 0.0:
        return area
    val, _ = _radial_convolution(lambda r: r**p.q, float(np.linalg.norm(v)), p.N)
    return area * val


def nu_hat(v, p: KernelParams) -> float:
    """Multiplier of the truncated operator:
    ``int |u|^{gamma+alpha+N-1} 1{|v-v'| <= 1} 1{theta <= theta0} mu(v*) dv* dsigma``.
    """
    v = as_velocity(v, "v")
    N = p.N
    q = p.gamma + p.alpha + (N - 1)
    # |v - v'| = |u| sin(theta/2): cap half-angle min(theta0, 2 asin(min(1, 1/|u|)))
    cap = lambda r: np.vectorize(
        lambda rr: cap_measure(min(p.theta0, 2.0 * np.arcsin(min(1.0, 1.0 / rr)) if rr > 0 else p.theta0), N)
    )(r)
    breaks = [1.0]
    if p.theta0 < pi:
        breaks.append(1.0 / np.sin(0.5 * p.theta0))
    val, _ = _radial_convolution(lambda r: r**q * cap(r), float(np.linalg.norm(v)), N, breaks)
    return val


# ---------------------------------------------------------------------------
# cross-section integral over omega^perp


@lru_cache(maxsize=64)
def _rho_template(n_geo: int, n_uni: int, k_geo: int = 12, uni_panels: int = 14):
    """Panels on [0, 1] (geometric toward 0) and on [0, 1] (uniform, rescaled later)."""
    geo_edges = np.concatenate([[0.0], 2.0 ** -np.arange(k_geo, -1, -1, dtype=float)])
    tg, wg = composite_gauss(geo_edges, n_geo)
    tu, wu = composite_gauss(np.linspace(0.0, 1.0, uni_panels + 1), n_uni)
    return tg, wg, tu, wu


def _cross_section(r, c, q, N, cot_half=0.0, n=8):
    """``int_{omega^perp} |W+z|^{q-(N-2)} exp(-|z + v_perp|^2/2) 1{theta<=theta0} dz``.

    ``r = |W|``, ``c = |v_perp|``; the deviation-angle cut becomes
    ``|z| >= r cot(theta0/2)``.  Arrays are broadcast and evaluated in chunks.
    """
    r, c = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(c, dtype=float))
    shape = r.shape
    r, c = r.ravel(), np.abs(c.ravel())
    p = q - (N - 2)
    if p == 0.0 and cot_half == 0.0:
        return np.full(shape, (2.0 * pi) ** ((N - 1) / 2.0))
    out = np.empty(r.shape)
    for s in range(0, r.size, _CHUNK):
        rr = r[s : s + _CHUNK, None]
        cc = c[s : s + _CHUNK, None]
        rho_min = rr * cot_half
        lo = np.where(cc - 9.0 > rho_min + 3.0, cc - 9.0, rho_min)
        hi = np.maximum(cc, rho_min) + 9.0
        # |W+z|^p varies on the scale r: grade geometrically down to r/8
        k_geo = int(np.clip(np.ceil(np.log2(8.0 / max(rr.min(), 1e-300))), 12, 60))
        tg, wg, tu, wu = _rho_template(max(n - 2, 4), n, k_geo)
        rho = np.concatenate([lo + tg[None, :], lo + 1.0 + (hi - lo - 1.0) * tu[None, :]], axis=1)
        w = np.concatenate([np.broadcast_to(wg, (rr.shape[0], wg.size)), (hi - lo - 1.0) * wu[None, :]], axis=1)
        rad = (rr * rr + rho * rho) ** (0.5 * p)
        if N == 3:
            f = 2.0 * pi * rho * rad * np.exp(-0.5 * (rho - cc) ** 2) * special.i0e(rho * cc)
        else:
            f = rad * (np.exp(-0.5 * (rho - cc) ** 2) + np.exp(-0.5 * (rho + cc) ** 2))
        out[s : s + _CHUNK] = np.sum(w * f, axis=1)
    return out.reshape(shape)


def _kq_from_invariants(r, a, c, q, N, cot_half=0.0, n=8):
    """``k_q`` from ``r = |v'-v|``, ``a = r + 2 v.omega`` and ``c = |v_perp|``."""
    pref = 2.0**N / (2.0 * pi) ** (N / 2.0)
    return pref / r * np.exp(-0.125 * (r * r + a * a)) * _cross_section(r, c, q, N, cot_half, n)


def _invariants(v, vp):
    W = vp - v
    r = float(np.linalg.norm(W))
    if r == 0.0:
        raise SingularityError("k_q is singular on the diagonal v == v'")
    om = W / r
    vo = float(np.dot(v, om))
    c = float(np.sqrt(max(np.dot(v, v) - vo * vo, 0.0)))
    return r, r + 2.0 * vo, c


def _cot_half(theta0):
    return 0.0 if theta0 >= pi else 1.0 / tan(0.5 * theta0)


def eval_kq(v, v_prime, p: VhsParams, theta0: float = pi, n: int = 10) -> float:
    """Gain kernel ``k_q(v, v')``; ``theta0 < pi`` restricts deviation angles."""
    _require_kq_domain(p.q)
    v = as_velocity(v, "v")
    vp = as_velocity(v_prime, "v_prime")
    r, a, c = _invariants(v, vp)
    return float(_kq_from_invariants(r, a, c, p.q, p.N, _cot_half(theta0), n))


def eval_khat(v, v_prime, ks: KhatSplit):
    """``(khat, khat_c, khat_r)`` for the truncated gain kernel.

    ``khat = k_{gamma+alpha+N-1} 1{|v-v'| <= 1} 1{theta <= theta0}`` and
    ``khat_c`` keeps pairs with ``|v-v'| >= eps`` and ``|vhat . (v-v')/|v-v'|| >= eps``.
    At ``v = 0`` the direction test is taken as passed.
    """
    v = as_velocity(v, "v")
    vp = as_velocity(v_prime, "v_prime")
    r, a, c = _invariants(v, vp)
    if r > 1.0:
        return 0.0, 0.0, 0.0
    k = float(_kq_from_invariants(r, a, c, ks.q, ks.N, _cot_half(ks.theta0)))
    vn = float(np.linalg.norm(v))
    t = 1.0 if vn == 0.0 else abs(float(np.dot(v, v - vp))) / (vn * r)
    kc = k if (r >= ks.eps and t >= ks.eps) else 0.0
    return k, kc, k - kc


# ---------------------------------------------------------------------------
# row integrals in coordinates centred at v


@dataclass
class _RowRule:
    r: np.ndarray  # (nr,)
    wr: np.ndarray
    phi: np.ndarray  # (nphi,)
    wphi: np.ndarray  # includes sin^{N-2}(phi) and the azimuthal measure


def _phi_edges(vn, extra_t=(), band=True):
    t_edges = {-1.0, 1.0, *[t for t in extra_t if -1.0 < t < 1.0]}
    if band and vn > 1.0:
        lo, hi = max(-1.0, -12.0 / vn), min(1.0, 6.0 / vn)
        m = int(np.ceil((hi - lo) * vn))
        t_edges.update(np.linspace(lo, hi, m + 1).tolist())
    phi = np.sort(np.arccos(np.clip(np.array(sorted(t_edges)), -1.0, 1.0)))
    out = [phi[0]]
    for b in phi[1:]:
        k = int(np.ceil((b - out[-1]) / 0.25))
        out.extend(np.linspace(out[-1], b, k + 1)[1:].tolist())
    return np.unique(np.array(out))


def _r_edges(r_max, extra=()):
    edges = {0.0, r_max, *[e for e in extra if 0.0 < e < r_max]}
    edges.update(2.0 ** -np.arange(1, 7, dtype=float))
    edges.update(np.arange(1.0, r_max, 1.0).tolist())
    return np.array(sorted(e for e in edges if e <= r_max))


def _row_rule(vn, N, n, r_max=18.0, r_extra=(), t_extra=()) -> _RowRule:
    r, wr = composite_gauss(_r_edges(r_max, r_extra), n)
    phi, wphi = composite_gauss(_phi_edges(vn, t_extra), n)
    wphi = wphi * (2.0 * pi * np.sin(phi) if N == 3 else 2.0)
    return _RowRule(r, wr, phi, wphi)


def _row_sum(vn, N, q, rule: _RowRule, F, cot_half=0.0, n=8, mask=None):
    """``sum over (r, phi)`` of ``r^{N-1} k_q F`` with ``F(r, t)`` (ψ-averaged)."""
    R = rule.r[:, None]
    t = np.cos(rule.phi)[None, :]
    a = R + 2.0 * vn * t
    c = vn * np.sin(rule.phi)[None, :]
    k = _kq_from_invariants(np.broadcast_to(R, a.shape), a, np.broadcast_to(c, a.shape), q, N, cot_half, n)
    vals = R ** (N - 1) * k * F(R, t)
    if mask is not None:
        vals = vals * mask(R, t)
    return float(np.sum(rule.wr[:, None] * rule.wphi[None, :] * vals))


def _radial_F(weight, vn):
    """Lift a radial weight of ``|v'|`` to the (r, t) coordinates."""
    return lambda R, t: weight(np.sqrt(np.maximum(vn * vn + R * R + 2.0 * vn * R * t, 0.0)))


def kq_row_integral(v, p: VhsParams, F: Callable, radial: bool = True, theta0: float = pi,
                    n: int = 8, n_azimuth: int = 24, tol: float = 1e-6, return_error: bool = False):
    """``int k_q(v, v') F(v') dv'`` with a refinement error estimate.

    ``F`` takes ``|v'|`` when ``radial`` is true, otherwise an array of
    velocities with shape ``(..., N)``.
    """
    _require_kq_domain(p.q)
    v = as_velocity(v, "v")
    vn = float(np.linalg.norm(v))
    cot = _cot_half(theta0)
    vals = []
    scale = 0.0
    for nn in (n, n + 4):
        rule = _row_rule(vn, p.N, nn)
        if radial:
            Fr = _radial_F(F, vn)
            Fa = lambda R, t, Fr=Fr: np.abs(Fr(R, t))
        else:
            Fr = _general_F(F, v, p.N, n_azimuth + (nn - n) * 2)
            Fa = _general_F(lambda x: np.abs(F(x)), v, p.N, n_azimuth + (nn - n) * 2)
        vals.append(_row_sum(vn, p.N, p.q, rule, Fr, cot, nn))
    # cancellation can make the value itself tiny; judge against int k |F|
    scale = max(abs(vals[1]), _row_sum(vn, p.N, p.q, rule, Fa, cot, nn), 1e-300)
    err = abs(vals[1] - vals[0])
    if err > tol * scale:
        raise AccuracyError(f"row integral did not converge (estimate {vals[1]!r}, error {err:.2e})")
    return (vals[1], err) if return_error else vals[1]


def _frame(v, N):
    vn = np.linalg.norm(v)
    e1 = v / vn if vn > 0 else np.eye(N)[0]
    if N == 2:
        return e1, np.array([-e1[1], e1[0]]), None
    a = np.eye(3)[int(np.argmin(np.abs(e1)))]
    e2 = a - np.dot(a, e1) * e1
    e2 /= np.linalg.norm(e2)
    return e1, e2, np.cross(e1, e2)


def _general_F(F, v, N, n_az):
    """ψ-averaged ``F(v + W)`` on the (r, t) mesh for a non-radial ``F``."""
    e1, e2, e3 = _frame(v, N)
    if N == 2:
        dirs = np.stack([e2, -e2])
    else:
        psi = 2.0 * pi * np.arange(n_az) / n_az
        dirs = np.cos(psi)[:, None] * e2 + np.sin(psi)[:, None] * e3

    def Fr(R, t):
        s = np.sqrt(np.maximum(1.0 - t * t, 0.0))
        pts = v + R[..., None, None] * (t[..., None, None] * e1 + s[..., None, None] * dirs)
        return np.mean(F(pts), axis=-1)

    return Fr


def kq_row_moment(v, p: VhsParams, s: float, tol: float = 1e-6) -> float:
    """``int k_q(v, v') (1 + |v'|)^s dv'``."""
    return kq_row_integral(v, p, lambda x: (1.0 + x) ** s, radial=True, tol=tol)


def kplus_kernel(g: Callable, v, p: VhsParams, tol: float = 1e-7) -> float:
    """``K+ g(v)`` through the kernel: ``int k_q(v, v') g(v') dv'``."""
    return kq_row_integral(v, p, g, radial=False, tol=tol)


def kplus_direct(g: Callable, v, p: VhsParams, n_rho: int = 40, sphere_degree: int = 41) -> float:
    """``K+ g(v) = 2 int g(v') mu^{1/2}(v'*) mu^{1/2}(v*) |v-v*|^q dv* dsigma``.

    Plain (v*, sigma) quadrature: ``v* = v - rho uhat`` with a Gauss-Jacobi
    rule for ``rho^{N-1+q}`` and product rules on both spheres.
    """
    v = as_velocity(v, "v")
    N = p.N
    R = float(np.linalg.norm(v)) + 16.0
    x, w = special.roots_jacobi(n_rho, 0.0, N - 1.0 + p.q)
    rho = 0.5 * R * (x + 1.0)
    wrho = w * (0.5 * R) ** (N + p.q)
    pts, wp = sphere_rule(N, sphere_degree)
    total = 0.0
    for ri, wi in zip(rho, wrho):
        u = ri * pts  # (m, N)
        vs = v - u
        center = v - 0.5 * u
        vprime = center[:, None, :] + 0.5 * ri * pts[None, :, :]
        vpstar = center[:, None, :] - 0.5 * ri * pts[None, :, :]
        f = g(vprime) * _sqrt_mu(vpstar) * _sqrt_mu(vs)[:, None]
        total += wi * float(wp @ f @ wp)
    return 2.0 * total


def _sqrt_mu(x):
    N = x.shape[-1]
    return (2.0 * pi) ** (-N / 4.0) * np.exp(-0.25 * np.sum(x * x, axis=-1))


def kc_apply(g: Callable, v, p: VhsParams, n_rho: int = 40, sphere_degree: int = 31) -> float:
    """Convolution part ``|S^{N-1}| mu^{1/2}(v) int |v-v*|^q mu^{1/2}(v*) g(v*) dv*``."""
    v = as_velocity(v, "v")
    N = p.N
    R = float(np.linalg.norm(v)) + 16.0
    x, w = special.roots_jacobi(n_rho, 0.0, N - 1.0 + p.q)
    rho = 0.5 * R * (x + 1.0)
    wrho = w * (0.5 * R) ** (N + p.q)
    pts, wp = sphere_rule(N, sphere_degree)
    vs = v - rho[:, None, None] * pts[None, :, :]
    f = _sqrt_mu(vs) * g(vs)
    return sphere_area(N) * float(_sqrt_mu(v[None, :])[0]) * float(wrho @ f @ wp)


# ---------------------------------------------------------------------------
# truncated kernel: remainder rows and Hilbert-Schmidt norm


def khat_row_integrals(v, ks: KhatSplit, n: int = 8):
    """``(int khat, int khat_c, int khat_r)`` over ``v'`` at fixed ``v``."""
    v = as_velocity(v, "v")
    vn = float(np.linalg.norm(v))
    eps = ks.eps
    rule = _row_rule(vn, ks.N, n, r_max=1.0, r_extra=(eps,), t_extra=(-eps, eps))
    one = lambda R, t: np.ones(np.broadcast_shapes(R.shape, t.shape))
    cot = _cot_half(ks.theta0)
    if vn == 0.0:
        comp = lambda R, t: (R >= eps) * np.ones_like(t)
    else:
        # (v - v') . vhat / |v - v'| = -t
        comp = lambda R, t: (R >= eps) * (np.abs(t) >= eps)
    full = _row_sum(vn, ks.N, ks.q, rule, one, cot, n)
    c = _row_sum(vn, ks.N, ks.q, rule, one, cot, n, mask=comp)
    return full, c, full - c


def khat_remainder_sup(ks: KhatSplit, speeds=(0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)) -> float:
    """``max over |v| in speeds`` of ``int |khat_r(v, .)|``.

    The integrand is nonnegative, so this is the row integral of ``khat_r``.
    """
    vals = []
    for s in speeds:
        v = np.zeros(ks.N)
        v[0] = s
        vals.append(khat_row_integrals(v, ks)[2])
    return float(max(vals))


def khat_hilbert_schmidt(ks: KhatSplit, weighted: bool = True, n: int = 6, tol: float = 1e-4,
                         return_error: bool = False):
    """Squared Hilbert-Schmidt norm of ``khat_c`` (optionally conjugated by
    ``(1 + |v|)^{-(gamma+alpha)/2}`` on both sides).

    The ``v`` integral is radial by rotation invariance; it is truncated where
    the direction cut forces Gaussian decay of the kernel.
    """
    N, eps = ks.N, ks.eps
    m = ks.gamma + ks.alpha
    v_max = (1.0 + np.sqrt(4.0 * 40.0)) / (2.0 * eps)
    cot = _cot_half(ks.theta0)
    comp = lambda R, t: (R >= eps) * (np.abs(t) >= eps)

    def inner(vn, nn):
        rule = _row_rule(vn, N, nn, r_max=1.0, r_extra=(eps,), t_extra=(-eps, eps))
        R = rule.r[:, None]
        t = np.cos(rule.phi)[None, :]
        a = R + 2.0 * vn * t
        c = np.broadcast_to(vn * np.sin(rule.phi)[None, :], a.shape)
        mask = comp(R, t)
        k = np.zeros(a.shape)
        sel = mask > 0
        Rb = np.broadcast_to(R, a.shape)
        k[sel] = _kq_from_invariants(Rb[sel], a[sel], c[sel], ks.q, N, cot, nn)
        vals = R ** (N - 1) * k * k
        if weighted:
            vpn = np.sqrt(np.maximum(vn * vn + R * R + 2.0 * vn * R * t, 0.0))
            vals = vals * (1.0 + vn) ** (-m) * (1.0 + vpn) ** (-m)
        return float(np.sum(rule.wr[:, None] * rule.wphi[None, :] * vals))

    results = []
    for nn in (n, n + 3):
        edges = np.concatenate([[0.0, 0.5, 1.0, 2.0], np.arange(4.0, v_max + 4.0, 4.0)])
        vs, wv = composite_gauss(edges, nn)
        vals = np.array([inner(x, nn) for x in vs])
        results.append(float(sphere_area(N) * np.sum(wv * vs ** (N - 1) * vals)))
    err = abs(results[1] - results[0])
    val = results[1]
    if not np.isfinite(val) or err > tol * abs(val):
        raise AccuracyError(f"Hilbert-Schmidt estimate did not converge ({val!r}, error {err:.2e})")
    return (val, err) if return_error else val
