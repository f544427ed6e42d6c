"""Bayesian estimation of Gaussian and D-vine copula models by MCMC."""
from .corr_param import (gamma_from_cholesky, gamma_from_partials, indicator_log_prior,
                         partials_from_gamma)
from .dvine import DVine
from .gaussian_copula import GaussianCopula
from .margins import DomainError, MarginSpec
from .pair_copulas import PairCopula
from .samplers import (FitTask, exact_discrete_loglik, run, run_dvine_selection,
                       run_gaussian_continuous, run_gaussian_discrete, run_gaussian_selection)

__version__ = "0.1.0"

__all__ = [
    "DVine", "DomainError", "FitTask", "GaussianCopula", "MarginSpec", "PairCopula",
    "exact_discrete_loglik", "gamma_from_cholesky", "gamma_from_partials",
    "indicator_log_prior", "partials_from_gamma", "run", "run_dvine_selection",
    "run_gaussian_continuous", "run_gaussian_discrete", "run_gaussian_selection",
]
