"""Linear-Gaussian factor model with a three-parameter beta-process prior."""
from .model import (
    FactorHyper,
    FactorState,
    collapsed_row_loglik,
    generate_synthetic,
    reconstruction_rmse,
)
from .sticks import round_log_prior, stick_mc_prob
from .gibbs import (
    sample_alpha,
    sample_gamma_mass,
    sample_Phi,
    sample_round_indicators,
    sample_theta,
    sample_W,
    sample_Z,
)
from .mcmc import MCMCConfig, Trace, autocorrelation, init_state, run_mcmc

__all__ = [
    "FactorHyper",
    "FactorState",
    "MCMCConfig",
    "Trace",
    "autocorrelation",
    "collapsed_row_loglik",
    "generate_synthetic",
    "init_state",
    "reconstruction_rmse",
    "round_log_prior",
    "run_mcmc",
    "sample_Phi",
    "sample_W",
    "sample_Z",
    "sample_alpha",
    "sample_gamma_mass",
    "sample_round_indicators",
    "sample_theta",
    "stick_mc_prob",
]
