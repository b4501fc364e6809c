"""Infection model, misclassification and the classical estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EstimationError, SelbiError
from ..randkit import RngStream
from .schema import MISSING, Cohort, CovariateSchema, dummy_encode


@dataclass(frozen=True)
class PrevalenceParams:
    """Logistic infection model: logit(p) = beta0 + beta . dummy(c)."""

    beta0: float
    beta: np.ndarray

    def __post_init__(self) -> None:
        beta = np.atleast_1d(np.asarray(self.beta, dtype=np.float64))
        if not (np.isfinite(self.beta0) and np.all(np.isfinite(beta))):
            raise ValueError("prevalence parameters must be finite")
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class TestCharacteristics:
    __test__ = False  # not a test case despite the name

    sensitivity: float = 0.886
    specificity: float = 0.997

    def __post_init__(self) -> None:
        for name in ("sensitivity", "specificity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def infection_probabilities(
    params: PrevalenceParams, covariates: np.ndarray, schema: CovariateSchema
) -> np.ndarray:
    x = dummy_encode(covariates, schema)
    if params.beta.shape != (schema.n_dummies,):
        raise ValueError(f"beta must have length {schema.n_dummies}, got {params.beta.shape}")
    logit = params.beta0 + x @ params.beta
    return 1.0 / (1.0 + np.exp(-logit))


def simulate_infections(
    params: PrevalenceParams,
    covariates: np.ndarray,
    schema: CovariateSchema,
    rng: RngStream,
) -> np.ndarray:
    """Draw latent infection statuses from the logistic model.

    Covariates must be complete; reference categories contribute
    nothing to the linear predictor.
    """
    p = infection_probabilities(params, covariates, schema)
    return (rng.generator.random(p.size) < p).astype(np.int64)


def apply_misclassification(
    y_true: np.ndarray, test: TestCharacteristics, rng: RngStream
) -> np.ndarray:
    """Push latent statuses through the diagnostic test.

    P(y=1 | true 1) = sensitivity, P(y=1 | true 0) = 1 - specificity.
    """
    y_true = np.asarray(y_true)
    if not np.all(np.isin(y_true, (0, 1))):
        raise ValueError("y_true must be binary")
    u = rng.generator.random(y_true.size)
    p_pos = np.where(y_true == 1, test.sensitivity, 1.0 - test.specificity)
    return (u < p_pos).astype(np.int64)


def rogan_gladen(rho_obs: float, test) -> float:
    """Correct an apparent prevalence for test misclassification.

    Parameters
    ----------
    rho_obs : float in [0, 1]
        Apparent (test-positive) prevalence.
    test : TestCharacteristics or (sensitivity, specificity) pair
        Must satisfy Se + Sp > 1.

    Returns
    -------
    float
        (rho_obs + Sp - 1) / (Se + Sp - 1), clamped to [0, 1].
    """
    if isinstance(test, TestCharacteristics):
        se, sp = test.sensitivity, test.specificity
    else:
        se, sp = test
    if not 0.0 <= rho_obs <= 1.0:
        raise ValueError(f"rho_obs must lie in [0, 1], got {rho_obs}")
    if se + sp <= 1.0:
        raise ValueError(f"Rogan-Gladen needs Se + Sp > 1, got {se} + {sp}")
    raw = (rho_obs + sp - 1.0) / (se + sp - 1.0)
    return float(min(1.0, max(0.0, raw)))


def naive_prevalence(cohort: Cohort, test: TestCharacteristics) -> float:
    """Unadjusted complete-case estimate, misclassification-corrected."""
    obs = cohort.y != MISSING
    if not obs.any():
        raise EstimationError("no observed outcomes in cohort")
    return rogan_gladen(float(cohort.y[obs].mean()), test)


def ipw_prevalence(
    cohort: Cohort, test: TestCharacteristics, weights: np.ndarray | None = None
) -> float:
    """Inverse-probability-weighted complete-case prevalence.

    Records are weighted by their oversampling weight (the reciprocal
    of the inclusion probability up to scale), averaged over complete
    cases, then misclassification-corrected.
    """
    if weights is None:
        weights = cohort.sampling_weights
    if weights is None:
        raise ValueError("cohort carries no sampling weights and none were given")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (cohort.n,) or np.any(weights <= 0):
        raise ValueError("weights must be positive, one per record")
    obs = cohort.y != MISSING
    if not obs.any():
        raise EstimationError("no observed outcomes in cohort")
    rho_obs = float(np.average(cohort.y[obs], weights=weights[obs]))
    return rogan_gladen(rho_obs, test)


@dataclass
class BootstrapResult:
    point: float
    lower: float
    upper: float
    estimates: np.ndarray
    n_failed: int
    unstable: bool


def bootstrap_estimate(
    estimator,
    base_sample: Cohort,
    B: int = 100,
    rng: RngStream | None = None,
) -> BootstrapResult:
    """Percentile bootstrap over resamples of the base sample.

    Parameters
    ----------
    estimator : callable(Cohort, RngStream) -> float
        Reruns the full pipeline on one resample.
    base_sample : Cohort
    B : int
        Number of resamples, at least 2.
    rng : RngStream
        Substream b drives resample b; substream B the point estimate.

    Returns
    -------
    BootstrapResult
        Point estimate on the original sample plus the 2.5/97.5
        percentile interval. Estimator failures are recorded and
        excluded; ``unstable`` flags a failure rate above 10%.
    """
    if B < 2:
        raise ValueError(f"B must be at least 2, got {B}")
    if rng is None:
        rng = RngStream(0)
    estimates = []
    n_failed = 0
    for b in range(B):
        sub = rng.child(b)
        idx = sub.generator.integers(0, base_sample.n, size=base_sample.n)
        try:
            estimates.append(float(estimator(base_sample.take(idx), sub.child(1))))
        except (SelbiError, ValueError, FloatingPointError):
            n_failed += 1
    if not estimates:
        raise EstimationError("all bootstrap replicates failed")
    estimates = np.asarray(estimates, dtype=np.float64)
    point = float(estimator(base_sample, rng.child(B)))
    lower, upper = np.percentile(estimates, [2.5, 97.5])
    return BootstrapResult(
        point=point,
        lower=float(lower),
        upper=float(upper),
        estimates=estimates,
        n_failed=n_failed,
        unstable=n_failed > 0.1 * B,
    )
