"""End-to-end prevalence simulation: prior draw to biased cohort.

One epoch frame (base sample, IPF weights, synthetic population) is
built once and reused across simulations; per simulation only the
infection outcomes, misclassification and subsample are redrawn. This
mirrors a fixed latent city whose study is repeated, and it is what
makes amortized training sets cheap to generate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..randkit import RngStream
from .estimators import (
    PrevalenceParams,
    TestCharacteristics,
    apply_misclassification,
    simulate_infections,
)
from .ipf import ipf_weights
from .population import (
    SyntheticPopulation,
    build_synthetic_population,
    generate_base_sample,
    impute_from_margins,
    subsample_biased,
)
from .schema import Cohort, CovariateSchema, MarginTable, default_margins, default_schema


@dataclass(frozen=True)
class PrevalencePrior:
    """Independent Gaussians on the logistic parameters."""

    beta0_mean: float = -3.0
    beta0_sd: float = 1.0
    beta_sd: float = 0.5

    def sample(self, schema: CovariateSchema, rng: RngStream) -> PrevalenceParams:
        gen = rng.generator
        return PrevalenceParams(
            beta0=float(gen.normal(self.beta0_mean, self.beta0_sd)),
            beta=gen.normal(0.0, self.beta_sd, size=schema.n_dummies),
        )


@dataclass
class PrevalenceDesign:
    """Everything fixed about the study besides the parameters."""

    schema: CovariateSchema = field(default_factory=default_schema)
    margins: MarginTable = field(default_factory=default_margins)
    cohort_size: int = 400
    pop_size: int = 4000
    test: TestCharacteristics = field(default_factory=TestCharacteristics)
    prior: PrevalencePrior = field(default_factory=PrevalencePrior)
    epochs: tuple[int, ...] = (1, 2, 3, 4, 5)
    # base-sample skew: tilts multiply the margins per dimension
    tilt: tuple | None = (
        np.array([1.0, 1.3]),
        np.array([0.5, 1.1, 1.3, 1.4, 0.8]),
        np.array([1.2, 0.6]),
        np.array([1.0, 1.2, 1.1, 0.6]),
    )
    covariate_missing_frac: tuple[float, ...] = (0.0, 0.02, 0.05, 0.02)
    # outcome missingness grows across epochs and depends on covariates
    outcome_missing_intercepts: tuple[float, ...] = (-20.0, -3.0, -2.0, -1.4, -0.9)
    outcome_missing_coef_scale: float = 0.8
    ipf_tol: float = 1e-8
    ipf_max_iter: int = 1000

    def outcome_missing_coef(self) -> np.ndarray:
        # deterministic covariate dependence so missingness is
        # informative rather than completely at random
        k = self.schema.n_dummies
        signs = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)
        return self.outcome_missing_coef_scale * signs * (0.5 + np.arange(k) / max(k - 1, 1))


@dataclass
class EpochFrame:
    """Fixed per-epoch context shared by all simulated datasets."""

    base: Cohort
    weights: np.ndarray
    population: SyntheticPopulation


def build_epoch_frame(design: PrevalenceDesign, epoch: int, rng: RngStream) -> EpochFrame:
    if epoch not in design.epochs:
        raise ValueError(f"epoch {epoch} not in design epochs {design.epochs}")
    e = design.epochs.index(epoch)
    base = generate_base_sample(
        design.schema,
        design.margins,
        design.cohort_size,
        epoch,
        rng.child(0),
        tilt=design.tilt,
        covariate_missing_frac=design.covariate_missing_frac,
        outcome_missing_intercept=design.outcome_missing_intercepts[e],
        outcome_missing_coef=design.outcome_missing_coef(),
    )
    imputed = impute_from_margins(base.covariates, design.margins, rng.child(1))
    weights = ipf_weights(imputed, design.margins, tol=design.ipf_tol, max_iter=design.ipf_max_iter)
    population = build_synthetic_population(
        base, design.margins, design.pop_size, rng.child(2), weights=weights
    )
    return EpochFrame(base=base, weights=weights, population=population)


def build_frames(design: PrevalenceDesign, rng: RngStream) -> dict[int, EpochFrame]:
    return {epoch: build_epoch_frame(design, epoch, rng.child(epoch)) for epoch in design.epochs}


@dataclass
class PrevalenceDataset:
    cohort: Cohort
    rho_true: float
    params: PrevalenceParams


def simulate_dataset(
    design: PrevalenceDesign,
    frame: EpochFrame,
    rng: RngStream,
    params: PrevalenceParams | None = None,
) -> PrevalenceDataset:
    """One (cohort, prevalence) pair from the joint model.

    The prevalence target is the population mean of the latent
    infection statuses, before misclassification and selection.
    """
    if params is None:
        params = design.prior.sample(design.schema, rng.child(0))
    pop = frame.population
    y_true = simulate_infections(params, pop.covariates, design.schema, rng.child(1))
    rho_true = float(y_true.mean())
    y_obs = apply_misclassification(y_true, design.test, rng.child(2))
    cohort = subsample_biased(pop, y_obs, design.cohort_size, rng.child(3))
    return PrevalenceDataset(cohort=cohort, rho_true=rho_true, params=params)
