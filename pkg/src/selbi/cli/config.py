"""Experiment configuration: one YAML file drives every command.

The file is flat sections of typed keys under a schema version. The
loader validates every key against a declared type table and reports
problems by dotted path, so a typo fails before any simulation starts.
Seeds live in the file (or the --seed flag); nothing is ever seeded
from the clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..household.config import SCHEMES

SCHEMA_VERSION = 1
APPLICATIONS = ("prevalence", "idm", "household")
VARIANTS = ("alpha", "omicron")
OBSERVATIONS = ("visits", "full")


@dataclass
class SimPrevalence:
    n: int = 100
    cohort_size: int = 400
    pop_size: int = 4000
    epochs: tuple = (1, 2, 3, 4, 5)


@dataclass
class SimIdm:
    n: int = 100
    cohort_size: int = 300
    epochs: tuple = (1, 2, 3, 4)
    observation: str = "visits"


@dataclass
class SimHousehold:
    n: int = 120
    variant: str = "omicron"
    schemes: tuple = SCHEMES
    n_rosters: int = 300
    replicates: int = 50
    n_select: int = 0          # 0 uses the variant's target study size
    horizon: int = 120


@dataclass
class TrainSettings:
    n_train: int = 0           # 0 trains on every simulated pair
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 5e-4
    weight_decay: float = 1e-4
    dropout: float = 0.1
    val_fraction: float = 0.15
    early_stop: bool = True
    patience: int = 20


@dataclass
class InferSettings:
    n_draws: int = 2000
    n_datasets: int = 0        # 0 runs every dataset in the manifest


@dataclass
class SbcSettings:
    n_sims: int = 200
    n_draws: int = 100
    level: float = 0.95
    family_size: int = 0       # 0 sizes the family as params x groups


@dataclass
class C2stSettings:
    n_pairs: int = 500
    folds: int = 5
    unit: str = "fold"
    permutations: int = 10
    classifier_epochs: int = 100
    patience: int = 10
    observation: str = ""      # idm only; empty inherits simulate.observation


@dataclass
class McmcSettings:
    n_draws: int = 2000
    n_chains: int = 4
    burn_in: int = 1000
    thin: int = 1
    dataset_index: int = 0


@dataclass
class GradcheckSettings:
    n_pairs: int = 6
    eps: float = 1e-5
    tol: float = 1e-5


@dataclass
class ExperimentConfig:
    application: str
    seed: int
    output_dir: str
    simulate: object
    train: TrainSettings = field(default_factory=TrainSettings)
    infer: InferSettings = field(default_factory=InferSettings)
    sbc: SbcSettings = field(default_factory=SbcSettings)
    c2st: C2stSettings = field(default_factory=C2stSettings)
    mcmc: McmcSettings = field(default_factory=McmcSettings)
    gradcheck: GradcheckSettings = field(default_factory=GradcheckSettings)


_SIM_CLASSES = {"prevalence": SimPrevalence, "idm": SimIdm, "household": SimHousehold}
_SECTION_CLASSES = {
    "train": TrainSettings,
    "infer": InferSettings,
    "sbc": SbcSettings,
    "c2st": C2stSettings,
    "mcmc": McmcSettings,
    "gradcheck": GradcheckSettings,
}

# value checks beyond plain typing, keyed by dotted path
_CHOICES = {
    "simulate.variant": VARIANTS,
    "simulate.observation": OBSERVATIONS,
    "c2st.unit": ("fold", "pair"),
    "c2st.observation": ("", *OBSERVATIONS),
}
_NONNEG = {
    "simulate.n", "train.n_train", "infer.n_datasets", "sbc.family_size",
    "mcmc.dataset_index", "simulate.n_select", "mcmc.burn_in",
}
_POSITIVE = {
    "simulate.cohort_size", "simulate.pop_size", "simulate.n_rosters",
    "simulate.replicates", "simulate.horizon",
    "train.epochs", "train.batch_size", "train.learning_rate", "train.patience",
    "infer.n_draws", "sbc.n_sims", "sbc.n_draws",
    "c2st.n_pairs", "c2st.folds", "c2st.permutations", "c2st.classifier_epochs",
    "c2st.patience",
    "mcmc.n_draws", "mcmc.n_chains", "mcmc.thin",
    "gradcheck.n_pairs", "gradcheck.eps", "gradcheck.tol",
}


def _coerce(path: str, value, kind):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if kind is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return tuple(value)
    raise ConfigError(f"{path}: unsupported schema type {kind!r}")


def _check_value(path: str, value):
    choices = _CHOICES.get(path)
    if choices is not None and value not in choices:
        raise ConfigError(f"{path}: must be one of {list(choices)}, got {value!r}")
    if path in _NONNEG and value < 0:
        raise ConfigError(f"{path}: must be >= 0, got {value}")
    if path in _POSITIVE and value <= 0:
        raise ConfigError(f"{path}: must be > 0, got {value}")
    if path == "simulate.schemes":
        if not value:
            raise ConfigError(f"{path}: needs at least one scheme")
        for s in value:
            if s not in SCHEMES:
                raise ConfigError(f"{path}: unknown scheme {s!r} (expected {list(SCHEMES)})")
    if path == "simulate.epochs":
        if not value:
            raise ConfigError(f"{path}: needs at least one epoch")
        for e in value:
            if isinstance(e, bool) or not isinstance(e, int):
                raise ConfigError(f"{path}: epochs must be integers, got {e!r}")
    if path in ("train.val_fraction", "train.dropout") and not 0.0 <= value < 1.0:
        raise ConfigError(f"{path}: must be in [0, 1), got {value}")
    if path == "sbc.level" and not 0.0 < value < 1.0:
        raise ConfigError(f"{path}: must be in (0, 1), got {value}")


def _build_section(name: str, cls, raw) -> object:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping of keys, got {raw!r}")
    known = {f.name for f in fields(cls)}
    defaults = cls()
    out = {}
    for key, value in raw.items():
        path = f"{name}.{key}"
        if key not in known:
            raise ConfigError(f"{path}: unknown key")
        kind = type(getattr(defaults, key))
        out[key] = _coerce(path, value, kind)
        _check_value(path, out[key])
    return replace(defaults, **out)


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML ({exc})") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    version = raw.pop("config_version", None)
    if version is None:
        raise ConfigError("config_version: required key missing")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config_version: schema {version!r} unsupported (expected {SCHEMA_VERSION})")

    application = raw.pop("application", None)
    if application is None:
        raise ConfigError("application: required key missing")
    if application not in APPLICATIONS:
        raise ConfigError(
            f"application: must be one of {list(APPLICATIONS)}, got {application!r}")

    seed = raw.pop("seed", None)
    if seed is None:
        raise ConfigError("seed: required key missing (seeds must be explicit)")
    seed = _coerce("seed", seed, int)

    output_dir = raw.pop("output_dir", None)
    if output_dir is None:
        output_dir = f"runs/{application}"
    else:
        output_dir = _coerce("output_dir", output_dir, str)

    simulate = _build_section("simulate", _SIM_CLASSES[application],
                              raw.pop("simulate", None))
    sections = {}
    for name, cls in _SECTION_CLASSES.items():
        sections[name] = _build_section(name, cls, raw.pop(name, None))
    if raw:
        raise ConfigError(f"{sorted(raw)[0]}: unknown key")

    return ExperimentConfig(application=application, seed=seed,
                            output_dir=output_dir, simulate=simulate, **sections)
