"""Copula-based hidden Markov models.

Simulation, EIFM estimation, local decoding, zero-one-loss analysis,
convergence diagnostics and uncertainty quantification.
"""

from .copulas import (
    CopulaSpec,
    Family,
    copula_cdf,
    copula_log_density,
    copula_sample,
    copula_score,
    tau_to_theta,
    theta_to_tau,
)
from .decode import (
    LossReport,
    closed_form_mixture_loss,
    independence_baseline_loss,
    local_decode,
    monte_carlo_loss,
    zero_one_loss,
)
from .eifm import FitConfig, FitTrace, fit, fit_multistart, ifm_step, initialize, optimize_copula_theta
from .estimating import estimating_function_psi, gauss_seidel_spectral_radius
from .fb import PosteriorSummaries, brute_force_posterior, forward_backward, log_likelihood
from .gof import cvm_statistic, pseudo_observations, select_family
from .margins import (
    MarginalSpec,
    MarginFamily,
    marginal_cdf,
    marginal_pdf,
    marginal_quantile,
    weighted_mle,
)
from .model import CopulaHmm, StateSpec, Trajectory, simulate, state_log_density
from .uncertainty import UncertaintyReport, godambe_monte_carlo, parametric_bootstrap

__version__ = "0.1.0"

__all__ = [
    "brute_force_posterior",
    "closed_form_mixture_loss",
    "copula_cdf",
    "copula_log_density",
    "copula_sample",
    "copula_score",
    "CopulaHmm",
    "CopulaSpec",
    "cvm_statistic",
    "estimating_function_psi",
    "Family",
    "fit",
    "fit_multistart",
    "FitConfig",
    "FitTrace",
    "forward_backward",
    "gauss_seidel_spectral_radius",
    "godambe_monte_carlo",
    "ifm_step",
    "independence_baseline_loss",
    "initialize",
    "local_decode",
    "log_likelihood",
    "LossReport",
    "marginal_cdf",
    "marginal_pdf",
    "marginal_quantile",
    "MarginalSpec",
    "MarginFamily",
    "monte_carlo_loss",
    "optimize_copula_theta",
    "parametric_bootstrap",
    "PosteriorSummaries",
    "pseudo_observations",
    "select_family",
    "simulate",
    "state_log_density",
    "StateSpec",
    "tau_to_theta",
    "theta_to_tau",
    "Trajectory",
    "UncertaintyReport",
    "weighted_mle",
    "zero_one_loss",
]
