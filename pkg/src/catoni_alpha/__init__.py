"""Robust mean estimation and l1 regression under finite alpha-th moments, 1 < alpha < 2."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import ConditionError, DomainError, RootNotFoundError
from .influence import AlphaParams, phi_derivative, phi_envelope, phi_widest
from .mestimator import (
    Conditions,
    DeviationReport,
    EstimatorConfig,
    SampleBatch,
    check_conditions,
    criterion_r,
    deviation_bound,
    estimate,
    solve_theta_hat,
    theta_plus_minus,
    tune_beta,
)
from .distributions import SymmetricParetoLaw, WorstCaseLaw, verify_moments
from .bounds import EpsilonGrid, empirical_mean_lower, empirical_mean_upper, figure_curves
from .regression import (
    GaussianDesignLaw,
    RegressionProblem,
    RiskConfig,
    excess_risk_bound,
    minimize_truncated_risk,
    truncated_risk,
)
from .simulate import simulate_mean_estimation

__all__ = [
    "__version__",
    "ConditionError",
    "DomainError",
    "RootNotFoundError",
    "AlphaParams",
    "phi_widest",
    "phi_derivative",
    "phi_envelope",
    "SampleBatch",
    "EstimatorConfig",
    "Conditions",
    "DeviationReport",
    "criterion_r",
    "solve_theta_hat",
    "tune_beta",
    "check_conditions",
    "deviation_bound",
    "theta_plus_minus",
    "estimate",
    "SymmetricParetoLaw",
    "WorstCaseLaw",
    "verify_moments",
    "EpsilonGrid",
    "empirical_mean_upper",
    "empirical_mean_lower",
    "figure_curves",
    "RegressionProblem",
    "RiskConfig",
    "truncated_risk",
    "minimize_truncated_risk",
    "excess_risk_bound",
    "GaussianDesignLaw",
    "simulate_mean_estimation",
]
