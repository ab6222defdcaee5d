"""Parameter sweeps over the coercivity plane and report output.

A sweep evaluates independent grid points, so it runs the same serially or
on a process pool; rows carry their own coordinates and are sorted before
output.  Wall time is recorded only on request so that identical
configurations give byte-identical files.
"""
from __future__ import annotations

import configparser
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boltzmann import (
    ANGULAR_CELLS,
    ANGULAR_ORDER,
    QUAD_TOL,
    coercivity_estimate,
    d1_weight_exponent,
    decomposition_matrices,
    default_beta,
    generalized_min,
)
from .errors import CoercivityError, DomainError, FitError, InputError
from .fitting import PowerFit, power_fit
from .kernels import KernelParams
from .landau import LandauParams, landau_assemble, landau_coercivity_estimate
from .spaces import build_basis

__all__ = [
    "SweepConfig",
    "GapReport",
    "FitSummary",
    "CSV_COLUMNS",
    "run_sweep",
    "fit_exponents",
    "emit_report",
    "format_float",
    "load_config",
    "kernel_checks",
    "chain_checks",
    "landau_degree_trend",
]

CSV_COLUMNS = (
    "gamma", "alpha", "epsilon", "basis_degree", "coercivity_estimate",
    "d1", "d2", "d3", "d4", "fit_exponent", "fit_residual", "quad_flag", "wall_ms",
)
MODES = ("boltzmann", "landau", "kernel-checks")
QUAD_KEYS = ("angular_cells", "angular_order")


@dataclass(frozen=True)
class SweepConfig:
    gamma_range: tuple = (-1.0, 1.0, 5)
    alpha_range: tuple = (0.25, 1.25, 5)
    epsilon: tuple = (0.0,)
    dim: int = 3
    basis_degree: int = 6
    quadrature: tuple = ()  # (key, value) pairs, see QUAD_KEYS
    mode: str = "boltzmann"
    seed: int = 0
    output: str | None = None
    format: str = "csv"
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        gr = _as_range(self.gamma_range, "gamma_range")
        ar = _as_range(self.alpha_range, "alpha_range")
        object.__setattr__(self, "gamma_range", gr)
        object.__setattr__(self, "alpha_range", ar)
        eps = tuple(float(e) for e in np.atleast_1d(self.epsilon))
        object.__setattr__(self, "epsilon", eps)
        quad = tuple(sorted(dict(self.quadrature).items()))
        object.__setattr__(self, "quadrature", quad)
        if self.dim not in (2, 3):
            raise InputError(f"dim must be 2 or 3, got {self.dim}")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise InputError(f"format must be csv or json, got {self.format!r}")
        if int(self.basis_degree) != self.basis_degree or self.basis_degree < 3:
            raise DomainError(f"basis_degree must be an integer >= 3, got {self.basis_degree}")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        if any(e < 0 for e in eps):
            raise DomainError("epsilon values must be >= 0")
        for k, _ in quad:
            if k not in QUAD_KEYS:
                raise InputError(f"unknown quadrature key {k!r}; expected one of {QUAD_KEYS}")
        N = self.dim
        if self.mode == "landau":
            if gr[0] < -N:
                raise DomainError(f"Landau gamma must be >= -N = {-N}")
        elif self.mode == "boltzmann":
            if not gr[0] > -N:
                raise DomainError(f"gamma must exceed -N = {-N}")
            if not (0.0 <= ar[0] and ar[1] < 2.0):
                raise DomainError("alpha must lie in [0, 2)")

    @property
    def gammas(self) -> np.ndarray:
        return _points(self.gamma_range)

    @property
    def alphas(self) -> np.ndarray:
        return _points(self.alpha_range)

    def quad(self, key, default):
        return dict(self.quadrature).get(key, default)


def _as_range(r, name):
    try:
        lo, hi, steps = r
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be (min, max, steps)") from exc
    lo, hi = float(lo), float(hi)
    if int(steps) != steps or steps < 1:
        raise InputError(f"{name} steps must be an integer >= 1, got {steps}")
    if hi < lo:
        raise InputError(f"{name} max is below min")
    return (lo, hi, int(steps))


def _points(r):
    lo, hi, steps = r
    return np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)


@dataclass
class GapReport:
    gamma: float
    alpha: float
    epsilon: float
    basis_degree: int
    coercivity_estimate: float
    d1: float = math.nan
    d2: float = math.nan
    d3: float = math.nan
    d4: float = math.nan
    fit_exponent: float = math.nan
    fit_residual: float = math.nan
    quad_flag: int = 0
    wall_ms: float = 0.0
    note: str = field(default="", compare=False)

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_COLUMNS}


# ---------------------------------------------------------------------------
# point evaluators


def _boltzmann_point(cfg: SweepConfig, gamma: float, alpha: float, eps: float) -> GapReport:
    t0 = time.perf_counter()
    basis = build_basis(cfg.dim, cfg.basis_degree)
    cells = int(cfg.quad("angular_cells", ANGULAR_CELLS))
    order = int(cfg.quad("angular_order", ANGULAR_ORDER))
    rep = GapReport(float(gamma), float(alpha), float(eps), cfg.basis_degree, math.nan)
    try:
        p = KernelParams(cfg.dim, float(gamma), float(alpha))
        est = coercivity_estimate(p, basis, eps, cells=cells, order=order)
        rep.coercivity_estimate = est.lambda_
        rep.quad_flag = int(est.residuals["quad_error"] > QUAD_TOL)
        if alpha > 0:
            beta = default_beta(cfg.dim, alpha)
            mats = decomposition_matrices(p, basis, beta)
            x = est.vector
            rep.d1, rep.d2, rep.d3, rep.d4 = (float(x @ mats[k] @ x) for k in ("d1", "d2", "d3", "d4"))
            slope, resid, _ = d1_weight_exponent(p, beta)
            rep.fit_exponent, rep.fit_residual = slope, resid
        else:
            rep.note = "no truncation window at alpha = 0"
    except CoercivityError as exc:
        rep.quad_flag = 1
        rep.note = f"{type(exc).__name__}: {exc}"
    if cfg.timing:
        rep.wall_ms = 1e3 * (time.perf_counter() - t0)
    return rep


def landau_degree_trend(gamma: float, N: int, degrees: Sequence[int]):
    """Unweighted Rayleigh minima ``min D_L / ||g - Pg||^2`` over ``degrees``
    and the log-log slope against the degree.

    Without a spectral gap the minimum keeps falling as the basis grows.
    """
    vals = []
    for d in degrees:
        basis = build_basis(N, d)
        A = landau_assemble(LandauParams(N, gamma), basis)
        vals.append(generalized_min(A, np.eye(basis.size), basis.n_invariants)[0])
    vals = np.array(vals)
    fit = power_fit(np.asarray(degrees, dtype=float), vals, min_points=2, min_decades=0.0)
    return vals, fit


def _landau_point(cfg: SweepConfig, gamma: float) -> GapReport:
    t0 = time.perf_counter()
    d = cfg.basis_degree
    rep = GapReport(float(gamma), math.nan, 0.0, d, math.nan)
    try:
        est = landau_coercivity_estimate(LandauParams(cfg.dim, float(gamma)), build_basis(cfg.dim, d))
        rep.coercivity_estimate = est.lambda_
        degrees = list(range(max(3, d - 2), d + 1))
        if len(degrees) >= 2:
            _, fit = landau_degree_trend(float(gamma), cfg.dim, degrees)
            rep.fit_exponent, rep.fit_residual = fit.slope, fit.residual
    except CoercivityError as exc:
        rep.quad_flag = 1
        rep.note = f"{type(exc).__name__}: {exc}"
    if cfg.timing:
        rep.wall_ms = 1e3 * (time.perf_counter() - t0)
    return rep


def _eval_point(args):
    cfg, kind, coords = args
    if kind == "landau":
        return _landau_point(cfg, *coords)
    return _boltzmann_point(cfg, *coords)


def _sort_key(r: GapReport):
    f = lambda x: (-math.inf if math.isnan(x) else x)
    return (f(r.gamma), f(r.alpha), f(r.epsilon))


def run_sweep(cfg: SweepConfig) -> list[GapReport]:
    """One report per grid point, sorted by ``(gamma, alpha, epsilon)``."""
    if cfg.mode == "landau":
        tasks = [(cfg, "landau", (float(g),)) for g in cfg.gammas]
    elif cfg.mode == "boltzmann":
        tasks = [(cfg, "boltzmann", (float(g), float(a), float(e)))
                 for g in cfg.gammas for a in cfg.alphas for e in cfg.epsilon]
    else:
        raise InputError("kernel checks have their own runner (see kernel_checks)")
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_eval_point, tasks))
    else:
        rows = [_eval_point(t) for t in tasks]
    return sorted(rows, key=_sort_key)


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class FitSummary:
    slope: float
    residual: float
    target: float
    deviation: float
    n: int

    def within(self, tol: float) -> bool:
        return abs(self.deviation) <= tol


def fit_exponents(x, y=None, target: float = math.nan, shift: float = 0.0) -> FitSummary:
    """Least-squares log-log slope, compared with ``target``.

    ``x`` is either the abscissa (with ``y``), a sequence of ``(x, y)`` pairs
    or a sequence of objects with ``x`` and ``y`` attributes.
    Needs at least 4 points spanning half a decade; ``shift = 1`` fits
    against ``log(1 + x)``.
    """
    if y is None:
        pts = [(p.x, p.y) if hasattr(p, "x") else tuple(p) for p in x]
        if not pts:
            raise FitError("no data")
        x, y = zip(*pts)
    fit: PowerFit = power_fit(x, y, shift=shift)
    return FitSummary(fit.slope, fit.residual, float(target), fit.slope - target, fit.n)


# ---------------------------------------------------------------------------
# output


def format_float(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "{:.17g}".format(x)


def _json_value(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return "{:.17g}".format(x)


def render(rows: Sequence, fmt: str = "csv", columns: Sequence[str] = CSV_COLUMNS) -> str:
    """Text of a report; ``rows`` are :class:`GapReport` objects or dicts."""
    if not rows:
        raise InputError("refusing to write an empty report")
    dicts = [r.row() if isinstance(r, GapReport) else dict(r) for r in rows]
    if fmt == "csv":
        lines = [",".join(columns)]
        for d in dicts:
            lines.append(",".join(d[c] if isinstance(d[c], str) else format_float(d[c]) for c in columns))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        items = []
        for d in dicts:
            body = ", ".join(
                f"{json.dumps(c)}: {json.dumps(d[c]) if isinstance(d[c], str) else _json_value(d[c])}"
                for c in columns
            )
            items.append("  {" + body + "}")
        return "[\n" + ",\n".join(items) + "\n]\n"
    raise InputError(f"unknown format {fmt!r}")


def emit_report(rows: Sequence, path, fmt: str = "csv", columns: Sequence[str] = CSV_COLUMNS) -> str:
    """Write ``rows`` to ``path`` (CSV or JSON); returns the path.

    The text is built in full before the file is opened, so a failing row
    never leaves a partial file.  An unwritable path raises ``OSError``.
    """
    text = render(rows, fmt, columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return os.fspath(path)


def read_csv(path) -> list[dict]:
    """Parse a report written by :func:`emit_report`."""
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for rec in csv.DictReader(fh):
            out.append({k: (int(v) if k in ("basis_degree", "quad_flag") else float(v)) for k, v in rec.items()})
    return out


# ---------------------------------------------------------------------------
# config files


def _parse_list(text):
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


def load_config(path, **overrides) -> SweepConfig:
    """Read a flat ``key = value`` file whose keys mirror :class:`SweepConfig`.

    Ranges are given as ``gamma_min``/``gamma_max``/``gamma_steps`` (same for
    alpha) or as ``gamma_range = min, max, steps``; ``epsilon`` is a comma
    list; quadrature keys are plain top-level keys.
    """
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[sweep]\n" + fh.read())
    raw = dict(parser["sweep"])
    return config_from_mapping(raw, **overrides)


def config_from_mapping(raw: dict, **overrides) -> SweepConfig:
    base = SweepConfig.__dataclass_fields__
    kw: dict = {}
    raw = {k.strip().lower(): v for k, v in raw.items()}
    for name in ("gamma", "alpha"):
        default = base[f"{name}_range"].default
        rng = list(_parse_list(raw.pop(f"{name}_range"))) if f"{name}_range" in raw else list(default)
        for i, part in enumerate(("min", "max", "steps")):
            key = f"{name}_{part}"
            if key in raw:
                rng[i] = float(raw.pop(key))
        kw[f"{name}_range"] = (rng[0], rng[1], int(rng[2]))
    if "epsilon" in raw:
        kw["epsilon"] = _parse_list(raw.pop("epsilon"))
    for dotted in [k for k in raw if "." in k]:
        alias = dotted.replace(".", "_")
        if alias not in QUAD_KEYS:
            raise InputError(f"grid key {dotted!r} is not adjustable; the assembly is exact in the velocity "
                             f"variables and only {', '.join(QUAD_KEYS)} can be set")
        raw[alias] = raw.pop(dotted)
    quad = {}
    for k in QUAD_KEYS:
        if k in raw:
            quad[k] = int(raw.pop(k))
    kw["quadrature"] = tuple(quad.items())
    conv = {"dim": int, "basis_degree": int, "seed": int, "workers": int, "mode": str, "format": str,
            "output": str, "out": str, "degree": int,
            "timing": lambda s: str(s).strip().lower() in ("1", "true", "yes", "on")}
    for k, v in raw.items():
        if k not in conv:
            raise InputError(f"unknown config key {k!r}")
        name = {"out": "output", "degree": "basis_degree"}.get(k, k)
        kw[name] = conv[k](v.strip())
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SweepConfig(**kw)


# ---------------------------------------------------------------------------
# kernel and chain suites

KERNEL_COLUMNS = ("check", "dim", "q", "s", "value", "target", "passed")
CHAIN_COLUMNS = ("gamma", "sample", "link_i", "link_ii", "link_iii", "link_iv", "passed")


def kernel_checks(cfg: SweepConfig, pairs: int = 100, qs=(0.0, 0.5, 1.0, 2.0),
                  moments=((0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1))) -> list[dict]:
    """Symmetry of ``k_q`` on seeded random pairs and row-moment decay slopes.

    Symmetry rows report the worst ``|k(v,v') - k(v',v)| / max(1, k)``
    (target 1e-8); slope rows report the fitted exponent of the row moment
    over ``|v|`` in [5, 20] against ``q + s - (N - 1)`` (tolerance 0.2).
    """
    from .grad_kernel import VhsParams, eval_kq, kq_row_moment

    N = cfg.dim
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for q in qs:
        p = VhsParams(q, N)
        worst = 0.0
        for _ in range(pairs):
            v, w = rng.normal(scale=2.0, size=(2, N))
            a, b = eval_kq(v, w, p), eval_kq(w, v, p)
            worst = max(worst, abs(a - b) / max(1.0, a))
        rows.append({"check": "symmetry", "dim": N, "q": q, "s": math.nan, "value": worst,
                     "target": 1e-8, "passed": int(worst <= 1e-8)})
    speeds = np.geomspace(5.0, 20.0, 6)
    for q, s in moments:
        p = VhsParams(float(q), N)
        vals = [kq_row_moment(np.r_[r, np.zeros(N - 1)], p, float(s)) for r in speeds]
        target = q + s - (N - 1)
        fit = fit_exponents(speeds, vals, target=target, shift=1.0)
        rows.append({"check": "moment_slope", "dim": N, "q": float(q), "s": float(s), "value": fit.slope,
                     "target": target, "passed": int(fit.within(0.2))})
    return rows


def random_complement_function(basis, rng):
    """Random trial function with ``Pg = 0``."""
    from .spaces import TrialFunction

    c = rng.standard_normal(basis.size)
    c[: basis.n_invariants] = 0.0
    return TrialFunction(basis, c)


def chain_checks(cfg: SweepConfig, samples: int = 100, degree: int | None = None) -> list[dict]:
    """The H^1 chain links on seeded random trial functions for each gamma."""
    from .landau import mcoerc_chain_check

    basis = build_basis(cfg.dim, degree or min(cfg.basis_degree, 4))
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for gam in cfg.gammas:
        for k in range(samples):
            rep = mcoerc_chain_check(random_complement_function(basis, rng), float(gam))
            e = rep.errors
            rows.append({"gamma": float(gam), "sample": k, "link_i": e["i"], "link_ii": e["ii"],
                         "link_iii": e["iii"], "link_iv": e["iv"], "passed": int(all(rep.passed.values()))})
    return rows
