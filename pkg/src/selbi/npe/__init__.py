"""Amortized neural posterior estimation on set-valued data.

Pure-numpy stack: a permutation-invariant deep-set encoder feeds a
mixture-density head, trained by maximum likelihood with hand-derived
gradients. The :class:`AmortizedPosterior` estimator wraps training,
standardization, and posterior queries behind a fit/predict-style API.
"""

from .checkpoint import export_text, load_checkpoint, save_checkpoint
from .model import AmortizedPosterior, PosteriorSample, canonical_rows
from .network import (
    Batch,
    NpeArchitecture,
    encode_summary,
    forward_nll,
    backward_nll,
    init_params,
    make_batch,
    mixture_log_density,
    mixture_stats,
    sample_mixture,
)
from .problems import (
    household_condition,
    household_rows,
    idm_rows,
    make_household_model,
    make_idm_model,
    make_prevalence_model,
    prevalence_condition,
    prevalence_rows,
    simulate_household_pairs,
    simulate_idm_pairs,
    simulate_prevalence_pairs,
)
from .train import AdamW, LossTrace, TrainConfig, cosine_lr, grad_check, train_npe
from .transforms import (
    ParamTransform,
    household_transform,
    idm_transform,
    prevalence_transform,
)

__all__ = [
    "AdamW",
    "AmortizedPosterior",
    "Batch",
    "LossTrace",
    "NpeArchitecture",
    "ParamTransform",
    "PosteriorSample",
    "TrainConfig",
    "backward_nll",
    "canonical_rows",
    "cosine_lr",
    "encode_summary",
    "export_text",
    "forward_nll",
    "grad_check",
    "household_condition",
    "household_rows",
    "household_transform",
    "idm_rows",
    "idm_transform",
    "init_params",
    "load_checkpoint",
    "make_batch",
    "make_household_model",
    "make_idm_model",
    "make_prevalence_model",
    "mixture_log_density",
    "mixture_stats",
    "prevalence_condition",
    "prevalence_rows",
    "prevalence_transform",
    "sample_mixture",
    "save_checkpoint",
    "simulate_household_pairs",
    "simulate_idm_pairs",
    "simulate_prevalence_pairs",
    "train_npe",
]
