"""Numerical coercivity estimates for linearized Boltzmann and Landau operators."""
from .boltzmann import (
    CoercivityEstimate,
    DirichletDecomposition,
    apply_L,
    coercivity_estimate,
    dirichlet_decompose,
    dirichlet_form,
    galerkin_assemble,
)
from .geometry import CollisionConfig, deviation_angle, post_collision_omega, post_collision_sigma
from .grad_kernel import KhatSplit, VhsParams, eval_khat, eval_kq, kplus_direct, kplus_kernel, nu_hat, nu_q
from .kernels import KernelParams, TruncationSpec, eval_B, eval_b_alpha, inverse_power_map, truncation_indicator
from .landau import LandauParams, landau_a, landau_coercivity_estimate, landau_dirichlet_form, mcoerc_chain_check
from .quadrature import build_angular_grid, build_velocity_grid, integrate
from .spaces import BasisSpec, MaxwellianParams, TrialFunction, build_basis
from .sweep import GapReport, SweepConfig, emit_report, fit_exponents, run_sweep

__all__ = [
    "BasisSpec",
    "CoercivityEstimate",
    "CollisionConfig",
    "DirichletDecomposition",
    "GapReport",
    "KernelParams",
    "KhatSplit",
    "LandauParams",
    "MaxwellianParams",
    "SweepConfig",
    "TrialFunction",
    "TruncationSpec",
    "VhsParams",
    "apply_L",
    "build_angular_grid",
    "build_basis",
    "build_velocity_grid",
    "coercivity_estimate",
    "deviation_angle",
    "dirichlet_decompose",
    "dirichlet_form",
    "emit_report",
    "eval_B",
    "eval_b_alpha",
    "eval_khat",
    "eval_kq",
    "fit_exponents",
    "galerkin_assemble",
    "integrate",
    "inverse_power_map",
    "kplus_direct",
    "kplus_kernel",
    "landau_a",
    "landau_coercivity_estimate",
    "landau_dirichlet_form",
    "mcoerc_chain_check",
    "nu_hat",
    "nu_q",
    "post_collision_omega",
    "post_collision_sigma",
    "run_sweep",
    "truncation_indicator",
]

__version__ = "0.1.0"
