"""Synthetic population construction and biased subsampling.

The population emulates the latent city-level data: the base sample is
oversampled with IPF weights until census margins are matched, missing
covariates are imputed from the margins (missing completely at random
by assumption), and the provenance of every synthetic individual is
retained so the original missingness pattern can be re-imposed when
the population is subsampled back down to cohort size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..randkit import RngStream
from .ipf import ipf_weights
from .schema import MISSING, Cohort, CovariateSchema, MarginTable, dummy_encode


@dataclass
class SyntheticPopulation:
    """Complete-covariate population with per-individual provenance."""

    covariates: np.ndarray          # (pop, n_dims) int, complete
    weights: np.ndarray             # (pop,) oversampling weight of the source record
    source_index: np.ndarray        # (pop,) row in the base sample
    source_missing: np.ndarray      # (pop, n_dims) bool, covariate missing at source
    source_outcome_missing: np.ndarray  # (pop,) bool, outcome missing at source
    epoch: int

    @property
    def size(self) -> int:
        return self.covariates.shape[0]


def impute_from_margins(
    covariates: np.ndarray, margins: MarginTable, rng: RngStream
) -> np.ndarray:
    """Fill -1 codes with independent draws from the target margins."""
    cov = np.array(covariates, dtype=np.int64, copy=True)
    gen = rng.generator
    for d, target in enumerate(margins.probs):
        miss = cov[:, d] == MISSING
        k = int(miss.sum())
        if k:
            cov[miss, d] = gen.choice(target.size, size=k, p=target)
    return cov


def build_synthetic_population(
    sample: Cohort,
    margins: MarginTable,
    pop_size: int,
    rng: RngStream,
    tol: float = 1e-8,
    max_iter: int = 1000,
    weights: np.ndarray | None = None,
) -> SyntheticPopulation:
    """Oversample a cohort into a margin-consistent synthetic population.

    Parameters
    ----------
    sample : Cohort
        Base sample; covariates may contain -1, outcomes mark the
        missingness pattern via y == -1.
    margins : MarginTable
        Census targets, one vector per covariate dimension.
    pop_size : int
        Number of synthetic individuals to draw.
    rng : RngStream
        Consumed for imputation and resampling.
    weights : ndarray, optional
        Precomputed IPF weights for the sample; computed here when
        omitted (raking runs on a one-shot imputed copy).

    Returns
    -------
    SyntheticPopulation
        Resampled with probability proportional to weight; missing
        covariates are imputed independently per synthetic copy, and
        each copy records its source row for later pattern restoration.
    """
    if pop_size <= 0:
        raise ValueError(f"pop_size must be positive, got {pop_size}")
    if weights is None:
        imputed = impute_from_margins(sample.covariates, margins, rng.child(0))
        weights = ipf_weights(imputed, margins, tol=tol, max_iter=max_iter)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (sample.n,) or np.any(weights <= 0):
            raise ValueError("weights must be positive, one per sample record")

    gen = rng.child(1).generator
    idx = gen.choice(sample.n, size=pop_size, replace=True, p=weights / weights.sum())
    idx = np.sort(idx)

    cov = impute_from_margins(sample.covariates[idx], margins, rng.child(2))
    return SyntheticPopulation(
        covariates=cov,
        weights=weights[idx],
        source_index=idx,
        source_missing=sample.covariates[idx] == MISSING,
        source_outcome_missing=sample.y[idx] == MISSING,
        epoch=sample.epoch,
    )


def subsample_biased(
    population: SyntheticPopulation,
    y: np.ndarray,
    cohort_size: int,
    rng: RngStream,
) -> Cohort:
    """Draw a cohort from the population, undoing the oversampling.

    Sampling is without replacement with inclusion probability
    proportional to 1/weight (Efraimidis-Spirakis exponential keys),
    so strata that were upweighted into the population are downweighted
    back into the cohort, reproducing the original sampling skew.
    Covariates and outcomes missing in the source record are reset to
    -1, preserving the per-epoch missingness pattern.
    """
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (population.size,):
        raise ValueError("y must provide one outcome per population member")
    if not 0 < cohort_size <= population.size:
        raise ValueError(
            f"cohort_size must lie in [1, {population.size}], got {cohort_size}"
        )
    gen = rng.generator
    p = 1.0 / population.weights
    keys = -np.log(gen.random(population.size)) / p
    sel = np.sort(np.argsort(keys, kind="stable")[:cohort_size])

    cov = np.array(population.covariates[sel], copy=True)
    cov[population.source_missing[sel]] = MISSING
    y_out = np.array(y[sel], copy=True)
    y_out[population.source_outcome_missing[sel]] = MISSING
    return Cohort(cov, y_out, population.epoch, sampling_weights=population.weights[sel])


def generate_base_sample(
    schema: CovariateSchema,
    margins: MarginTable,
    n: int,
    epoch: int,
    rng: RngStream,
    tilt: tuple[np.ndarray, ...] | None = None,
    covariate_missing_frac: tuple[float, ...] | None = None,
    outcome_missing_intercept: float = -20.0,
    outcome_missing_coef: np.ndarray | None = None,
    nominal_prevalence: float = 0.05,
) -> Cohort:
    """Generate a stand-in for the original study file.

    The real cohort is not shippable, so this draws covariates from
    tilted margins (``tilt`` multiplies each margin vector, inducing
    the sampling skew that IPF later corrects), masks covariates
    completely at random per dimension, and marks outcomes missing with
    probability logistic(intercept + coef . dummy(c)), which lets the
    per-epoch missingness depend on covariates. Outcome values
    themselves are placeholders; downstream simulation replaces them
    and uses only the missingness pattern.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    gen = rng.generator
    probs = []
    for d, target in enumerate(margins.probs):
        q = np.array(target, copy=True)
        if tilt is not None:
            t = np.asarray(tilt[d], dtype=np.float64)
            if t.shape != q.shape or np.any(t <= 0):
                raise ValueError(f"tilt for {margins.dims[d]} must be positive per category")
            q *= t
        probs.append(q / q.sum())

    cov = np.column_stack([gen.choice(p.size, size=n, p=p) for p in probs]).astype(np.int64)

    x = dummy_encode(cov, schema)
    coef = np.zeros(schema.n_dummies) if outcome_missing_coef is None else np.asarray(outcome_missing_coef, dtype=np.float64)
    if coef.shape != (schema.n_dummies,):
        raise ValueError(f"outcome_missing_coef must have length {schema.n_dummies}")
    p_miss = 1.0 / (1.0 + np.exp(-(outcome_missing_intercept + x @ coef)))
    miss_y = gen.random(n) < p_miss

    y = (gen.random(n) < nominal_prevalence).astype(np.int64)
    y[miss_y] = MISSING

    if covariate_missing_frac is not None:
        for d, f in enumerate(covariate_missing_frac):
            if not 0.0 <= f < 1.0:
                raise ValueError(f"covariate_missing_frac[{d}] must lie in [0, 1)")
            cov[gen.random(n) < f, d] = MISSING

    return Cohort(cov, y, epoch)
