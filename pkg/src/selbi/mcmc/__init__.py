"""Likelihood-based baseline for the household model.

An explicit latent-time log-likelihood (which assumes random household
inclusion) plus a block-adaptive random-walk Metropolis sampler and
standard convergence diagnostics. On data selected through a biased
inclusion scheme this machinery happily converges to the wrong answer,
which is the comparison the rest of the package is built around.
"""

from .convergence import ChainDiagnostics, chain_diagnostics
from .io import write_chain_summary, write_chains
from .likelihood import (
    N_PARAMS,
    PENALTY_SCALE,
    HouseholdPosterior,
    LatentAugmentedState,
    household_loglik,
    posterior_param_draws,
)
from .sampler import TARGET_ACCEPT, Chain, ProposalLog, metropolis_sample, run_chains

__all__ = [
    "N_PARAMS",
    "PENALTY_SCALE",
    "TARGET_ACCEPT",
    "Chain",
    "ChainDiagnostics",
    "HouseholdPosterior",
    "LatentAugmentedState",
    "ProposalLog",
    "chain_diagnostics",
    "household_loglik",
    "metropolis_sample",
    "posterior_param_draws",
    "run_chains",
    "write_chain_summary",
    "write_chains",
]
