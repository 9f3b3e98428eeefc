"""Exact finite-state kernel algebra."""
from .finite_mcmc import (
    FiniteDist,
    FiniteKernel,
    MarginalSplit,
    OrderingReport,
    RealFunction,
    SpectralInfo,
    augment,
    build_da,
    build_mh,
    check_reversible,
    dirichlet_form,
    exact_asvar,
    jump_transform,
    peskun_check,
    poisson_asvar,
    q_average,
    random_reversible_instance,
    restrict,
    spectral_info,
    stationary_dist,
    subprob_dirichlet_form,
    variational_asvar,
)

__all__ = [
    "FiniteDist",
    "FiniteKernel",
    "MarginalSplit",
    "OrderingReport",
    "RealFunction",
    "SpectralInfo",
    "augment",
    "build_da",
    "build_mh",
    "check_reversible",
    "dirichlet_form",
    "exact_asvar",
    "jump_transform",
    "peskun_check",
    "poisson_asvar",
    "q_average",
    "random_reversible_instance",
    "restrict",
    "spectral_info",
    "stationary_dist",
    "subprob_dirichlet_form",
    "variational_asvar",
]
