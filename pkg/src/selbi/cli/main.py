"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError, SelbiError
from .commands import COMMANDS, output_root
from .config import SCHEMES, VARIANTS, load_config

_HELP = {
    "simulate": "draw datasets and ground-truth parameters from the prior",
    "train": "fit the amortized posterior on simulated pairs",
    "infer": "sample the posterior for each simulated dataset",
    "sbc": "rank-based calibration check against the prior",
    "c2st": "classifier two-sample test of posterior draws",
    "mcmc": "likelihood-based reference posterior (household only)",
    "gradcheck": "finite-difference check of the training gradients",
}

# which config field a bare --n overrides, per command
_N_TARGETS = {
    "simulate": ("simulate", "n"),
    "train": ("train", "n_train"),
    "infer": ("infer", "n_datasets"),
    "sbc": ("sbc", "n_sims"),
    "c2st": ("c2st", "n_pairs"),
    "mcmc": ("mcmc", "n_draws"),
    "gradcheck": ("gradcheck", "n_pairs"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selbi",
        description="simulation-based inference workbench for selected data",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in _HELP.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--workers", type=int, default=1,
                       help="cap for the worker pool (default 1, single process)")
        p.add_argument("--n", type=int, help="override the command's main count")
        p.add_argument("--scheme", help="restrict to one selection scheme (household)")
        p.add_argument("--variant", help="override the pathogen variant (household)")
        p.add_argument("--epoch", type=int,
                       help="restrict to one configured epoch (prevalence, idm)")
    return parser


def _apply_overrides(cfg, args) -> None:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers < 1:
        raise ConfigError(f"--workers must be at least 1, got {args.workers}")
    if args.n is not None:
        section, key = _N_TARGETS[args.command]
        if args.n < 0:
            raise ConfigError(f"--n must be nonnegative, got {args.n}")
        if args.n == 0 and args.command != "simulate":
            raise ConfigError(f"--n 0 is only meaningful for simulate")
        setattr(getattr(cfg, section), key, args.n)
    if args.scheme is not None:
        if cfg.application != "household":
            raise ConfigError("--scheme only applies to the household application")
        if args.scheme not in SCHEMES:
            raise ConfigError(f"--scheme must be one of {SCHEMES}, got {args.scheme!r}")
        cfg.simulate.schemes = (args.scheme,)
    if args.variant is not None:
        if cfg.application != "household":
            raise ConfigError("--variant only applies to the household application")
        if args.variant not in VARIANTS:
            raise ConfigError(f"--variant must be one of {VARIANTS}, got {args.variant!r}")
        cfg.simulate.variant = args.variant
    if args.epoch is not None:
        if cfg.application not in ("prevalence", "idm"):
            raise ConfigError("--epoch applies to the prevalence and idm applications")
        if args.epoch not in cfg.simulate.epochs:
            raise ConfigError(
                f"--epoch {args.epoch} is not in the configured epochs {cfg.simulate.epochs}")
        cfg.simulate.epochs = (args.epoch,)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_overrides(cfg, args)
        root = output_root(cfg, args.out)
        COMMANDS[args.command](cfg, root, workers=args.workers)
    except SelbiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code or 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
