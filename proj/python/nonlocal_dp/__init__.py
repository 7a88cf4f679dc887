"""Grid and Monte Carlo engine for time-consistent convex dynamic procedures."""

from ._core import (
    Control,
    EngineError,
    McEstimate,
    Model,
    SolveResult,
    brute_force_dp,
    check_time_consistency,
    convergence_study,
    evaluate_control,
    exp_martingale_stat,
    g_heat_reference,
    gaussian_semigroup,
    generator_martingale_stat,
    load_model,
    load_model_file,
    mc_cocycle_residual,
    mc_expectation,
    mc_lower_bound,
    mc_penalty,
    paste_bifurcation,
    paste_composition,
    solve,
)

__all__ = [
    "Control",
    "EngineError",
    "McEstimate",
    "Model",
    "SolveResult",
    "brute_force_dp",
    "check_time_consistency",
    "convergence_study",
    "evaluate_control",
    "exp_martingale_stat",
    "g_heat_reference",
    "gaussian_semigroup",
    "generator_martingale_stat",
    "load_model",
    "load_model_file",
    "mc_cocycle_residual",
    "mc_expectation",
    "mc_lower_bound",
    "mc_penalty",
    "paste_bifurcation",
    "paste_composition",
    "solve",
]
