"""Config-driven command line for the full experiment pipeline."""

from .commands import (
    COMMANDS,
    OUTPUT_ROOT_ENV,
    cmd_c2st,
    cmd_gradcheck,
    cmd_infer,
    cmd_mcmc,
    cmd_sbc,
    cmd_simulate,
    cmd_train,
    output_root,
)
from .config import ExperimentConfig, load_config
from .main import build_parser, main

__all__ = [
    "COMMANDS",
    "OUTPUT_ROOT_ENV",
    "ExperimentConfig",
    "build_parser",
    "cmd_c2st",
    "cmd_gradcheck",
    "cmd_infer",
    "cmd_mcmc",
    "cmd_sbc",
    "cmd_simulate",
    "cmd_train",
    "load_config",
    "main",
    "output_root",
]
