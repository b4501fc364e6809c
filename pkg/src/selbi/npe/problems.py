"""Glue between the three simulators and the generic NPE machinery.

Each application contributes three things: a row encoding (one float
row per subject or household member), an optional condition vector
describing the study design the dataset came from, and a model factory
with widths sized to the problem. Training-set builders pair simulated
datasets with the parameter draws that produced them.
"""

import numpy as np

from ..errors import InsufficientSampleError
from ..household.config import SCHEMES, HouseholdPrior, get_variant
from ..household.encode import N_FEATURES, VARIANT_CODES, encode_dataset
from ..household.sim import simulate_study
from ..illness_death.model import IdmPrior
from ..illness_death.simulate import (
    IdmDesign,
    simulate_full_data_dataset,
    simulate_idm_dataset,
)
from ..prevalence.simulate import PrevalenceDesign, simulate_dataset
from .model import AmortizedPosterior
from .train import TrainConfig
from .transforms import household_transform, idm_transform, prevalence_transform

# attempts per training pair before giving up on the parameter region
MAX_REDRAWS = 200


# ---------------------------------------------------------------- prevalence

PREVALENCE_EPOCHS = (1, 2, 3, 4, 5)


def prevalence_rows(cohort) -> np.ndarray:
    """One row per sampled subject: four covariate codes plus outcome.

    Missing entries keep their -1 sentinel; the network sees
    missingness directly rather than through imputation.
    """
    return np.column_stack([
        cohort.covariates.astype(np.float64),
        cohort.y.astype(np.float64),
    ])


def prevalence_condition(epoch: int) -> np.ndarray:
    if epoch not in PREVALENCE_EPOCHS:
        raise ValueError(f"epoch must be in {PREVALENCE_EPOCHS}, got {epoch}")
    cond = np.zeros(len(PREVALENCE_EPOCHS))
    cond[epoch - 1] = 1.0
    return cond


def make_prevalence_model(train_config: TrainConfig | None = None) -> AmortizedPosterior:
    return AmortizedPosterior(
        transform=prevalence_transform(),
        summary_dim=4,
        cond_dim=len(PREVALENCE_EPOCHS),
        encoder_width=64,
        trunk_width=128,
        train_config=train_config,
    )


def prevalence_pair(design: PrevalenceDesign, frames: dict, epoch: int, rng):
    """One joint draw (parameters implicit in the dataset) at a fixed epoch."""
    return simulate_dataset(design, frames[epoch], rng)


def simulate_prevalence_pairs(design: PrevalenceDesign, frames: dict, n_pairs: int,
                              rng) -> tuple[list, np.ndarray, np.ndarray]:
    """Training pairs cycling deterministically through the epochs.

    Returns (rows_list, thetas (J,1), conditions (J,5)).
    """
    epochs = design.epochs
    rows_list = []
    thetas = np.empty((n_pairs, 1))
    conds = np.empty((n_pairs, len(PREVALENCE_EPOCHS)))
    for j in range(n_pairs):
        epoch = epochs[j % len(epochs)]
        ds = prevalence_pair(design, frames, epoch, rng.child(j))
        rows_list.append(prevalence_rows(ds.cohort))
        thetas[j, 0] = ds.rho_true
        conds[j] = prevalence_condition(epoch)
    return rows_list, thetas, conds


# ------------------------------------------------------------- illness-death

IDM_ROW_FIELDS = (
    "sex", "age", "visit1", "visit2",
    "illness_time", "illness_ind", "death_time", "death_ind",
)


def idm_rows(batch) -> np.ndarray:
    """One row per subject: covariates, visit times, observed events."""
    return np.column_stack([
        batch.sex, batch.age, batch.visit1, batch.visit2,
        batch.illness_time, batch.illness_ind.astype(np.float64),
        batch.death_time, batch.death_ind.astype(np.float64),
    ])


def make_idm_model(train_config: TrainConfig | None = None) -> AmortizedPosterior:
    # 2 summary slots per parameter keeps the bottleneck comfortable
    return AmortizedPosterior(
        transform=idm_transform(),
        summary_dim=24,
        cond_dim=0,
        encoder_width=128,
        trunk_width=256,
        train_config=train_config,
    )


def idm_pair(design: IdmDesign, cohort, rng, observation: str = "visits"):
    """One (parameters, record batch) joint draw for a fixed cohort."""
    if observation not in ("visits", "full"):
        raise ValueError(f"observation must be 'visits' or 'full', got {observation!r}")
    params = design.prior.sample(rng.child(0))
    if observation == "visits":
        batch = simulate_idm_dataset(params, cohort, design.visit_cfg, rng.child(1))
    else:
        batch = simulate_full_data_dataset(params, cohort, design.visit_cfg, rng.child(1))
    return params, batch


def simulate_idm_pairs(design: IdmDesign, cohorts: dict, n_pairs: int, rng,
                       observation: str = "visits") -> tuple[list, np.ndarray, None]:
    """Training pairs under the visit process or with full event data.

    ``observation="visits"`` matches the study design; ``"full"`` trains
    the deliberately misspecified comparison model on administratively
    censored complete data.
    """
    if observation not in ("visits", "full"):
        raise ValueError(f"observation must be 'visits' or 'full', got {observation!r}")
    epochs = design.epochs
    rows_list = []
    thetas = np.empty((n_pairs, 12))
    for j in range(n_pairs):
        cohort = cohorts[epochs[j % len(epochs)]]
        params, batch = idm_pair(design, cohort, rng.child(j), observation)
        rows_list.append(idm_rows(batch))
        thetas[j] = params.to_vector()
    return rows_list, thetas, None


# ------------------------------------------------------------------ household


def household_rows(dataset) -> np.ndarray:
    """Flatten the padded (N, 8, F) member encoding to (N*8, F) rows.

    Padding rows are all -1 and pool to nothing inside the encoder, so
    households of different sizes coexist in one row set.
    """
    return encode_dataset(dataset).reshape(-1, N_FEATURES)


def household_condition(scheme: str, variant_name: str) -> np.ndarray:
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if variant_name not in VARIANT_CODES:
        raise ValueError(f"unknown variant {variant_name!r}")
    cond = np.zeros(len(SCHEMES) + 1)
    cond[SCHEMES.index(scheme)] = 1.0
    cond[-1] = VARIANT_CODES[variant_name]
    return cond


def make_household_model(train_config: TrainConfig | None = None) -> AmortizedPosterior:
    return AmortizedPosterior(
        transform=household_transform(),
        summary_dim=33,
        cond_dim=len(SCHEMES) + 1,
        encoder_width=128,
        trunk_width=256,
        train_config=train_config,
    )


def simulate_household_pairs(rosters: list, variant_name: str, n_pairs: int, rng,
                             schemes: tuple = SCHEMES,
                             prior: HouseholdPrior | None = None,
                             n_select: int | None = None,
                             replicates: int | None = None,
                             horizon: int | None = None) -> tuple[list, np.ndarray, np.ndarray]:
    """Training pairs cycling through selection schemes under one variant.

    Parameter draws that leave too few eligible households for the
    requested study size are redrawn with a fresh substream; those
    regions have essentially no posterior mass for datasets that did
    recruit, so dropping them matches the conditioning.
    """
    variant = get_variant(variant_name)
    prior = prior or HouseholdPrior()
    kwargs = {}
    if replicates is not None:
        kwargs["replicates"] = replicates
    if horizon is not None:
        kwargs["horizon"] = horizon
    rows_list = []
    thetas = np.empty((n_pairs, 11))
    conds = np.empty((n_pairs, len(SCHEMES) + 1))
    for j in range(n_pairs):
        scheme = schemes[j % len(schemes)]
        params, study = household_pair(rosters, variant, scheme, rng.child(j),
                                       prior=prior, n_select=n_select, **kwargs)
        rows_list.append(household_rows(study))
        thetas[j] = params.to_vector()
        conds[j] = household_condition(scheme, variant_name)
    return rows_list, thetas, conds


def household_pair(rosters: list, variant, scheme: str, rng,
                   prior: HouseholdPrior | None = None,
                   n_select: int | None = None, **sim_kwargs):
    """One (parameters, selected study) joint draw for a fixed scheme.

    Redraws the parameters on InsufficientSampleError, conditioning the
    pair distribution on a study of the requested size existing."""
    prior = prior or HouseholdPrior()
    for attempt in range(MAX_REDRAWS):
        draw = rng.child(attempt)
        params = prior.sample(draw.child(0))
        try:
            study = simulate_study(rosters, params, variant, scheme,
                                   draw.child(1), n_select=n_select, **sim_kwargs)
        except InsufficientSampleError:
            continue
        return params, study
    raise InsufficientSampleError(
        f"no eligible draw for scheme {scheme!r} after {MAX_REDRAWS} attempts")
