"""Gaussian transport baselines, structural diagnostics and tail estimation."""

from fmkinetics.analysis.diagnostics import (
    AsymmetryReport,
    MemorizationStats,
    asymmetry_report,
    continuity_residual,
    jacobian_fd,
    memorization_proxy,
    skew_condition_sum,
)
from fmkinetics.analysis.ot import (
    AffineGrowthConstants,
    GaussianTransport,
    Thm1Constants,
    affine_growth_constants,
    chisq_tail_bound,
    energy_identity_residual,
    exp_tail_bound,
    gaussian_mgf,
    inverse_map,
    monge_map,
    ot_energy,
    thm1_constants,
    w2_squared_gaussian,
)
from fmkinetics.analysis.tails import (
    SurvivalCurve,
    TailFitResult,
    TailModel,
    bound_domination_check,
    compare_tail_models,
    fit_exponential_tail,
    fit_polynomial_tail,
    survival_function,
)

__all__ = [
    "AffineGrowthConstants",
    "AsymmetryReport",
    "GaussianTransport",
    "MemorizationStats",
    "SurvivalCurve",
    "TailFitResult",
    "TailModel",
    "Thm1Constants",
    "affine_growth_constants",
    "asymmetry_report",
    "bound_domination_check",
    "chisq_tail_bound",
    "compare_tail_models",
    "continuity_residual",
    "energy_identity_residual",
    "exp_tail_bound",
    "fit_exponential_tail",
    "fit_polynomial_tail",
    "gaussian_mgf",
    "inverse_map",
    "jacobian_fd",
    "memorization_proxy",
    "monge_map",
    "ot_energy",
    "skew_condition_sum",
    "survival_function",
    "thm1_constants",
    "w2_squared_gaussian",
]
