"""Amortized posterior estimator tying encoder, head and transforms.

The estimator follows the usual fit/predict shape: ``fit`` consumes
simulated (dataset, parameters) pairs, everything afterwards is
read-only amortized inference (summaries, densities, samples) with no
weight updates. Fitted attributes carry the trailing underscore.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EncodingError
from ..randkit import RngStream
from ..validation import check_fitted
from .network import (
    NpeArchitecture,
    encode_summary,
    mixture_log_density,
    mixture_stats,
    sample_mixture,
)
from .train import TrainConfig, train_npe
from .transforms import ParamTransform

PAD_VALUE = -1.0


def canonical_rows(rows) -> np.ndarray:
    """Drop all-padding rows and sort the rest lexicographically.

    The sort fixes a canonical row order so pooled summaries are
    bitwise identical under row permutations, not just equal up to
    float summation order.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise EncodingError(f"encoded dataset must be 2-dimensional, got shape {rows.shape}")
    keep = ~np.all(rows == PAD_VALUE, axis=1)
    rows = rows[keep]
    if rows.shape[0] == 0:
        raise EncodingError("dataset contains only padding rows")
    order = np.lexsort(rows.T[::-1])
    return rows[order]


@dataclass
class PosteriorSample:
    """Draws in natural parameter space with their log densities."""

    samples: np.ndarray
    log_density: np.ndarray

    @property
    def mode(self) -> np.ndarray:
        return self.samples[int(np.argmax(self.log_density))]


class AmortizedPosterior:
    """Deep-set encoder + mixture density head over transformed parameters."""

    def __init__(self, transform: ParamTransform, summary_dim: int,
                 cond_dim: int = 0, encoder_width: int = 64, trunk_width: int = 128,
                 m_components: int = 10, train_config: TrainConfig | None = None):
        self.transform = transform
        self.summary_dim = summary_dim
        self.cond_dim = cond_dim
        self.encoder_width = encoder_width
        self.trunk_width = trunk_width
        self.m_components = m_components
        self.train_config = train_config or TrainConfig()

    # -- fitting -------------------------------------------------------

    def fit(self, X, y, conditions=None, rng: RngStream | None = None):
        """Train on pairs: X = list of encoded datasets, y = parameters.

        Row and parameter standardization constants are computed here
        and frozen; inference methods never mutate the model again.
        """
        rng = rng or RngStream(0, 0)
        if len(X) == 0:
            raise ValueError("need at least one training pair")
        y = np.asarray(y, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        if y.shape[0] != len(X):
            raise ValueError("one parameter row per dataset required")
        if y.shape[1] != self.transform.n_params:
            raise ValueError(
                f"parameters have {y.shape[1]} columns, transform expects "
                f"{self.transform.n_params}"
            )
        cond = self._check_conditions(conditions, len(X))

        cleaned = [canonical_rows(r) for r in X]
        row_dim = cleaned[0].shape[1]
        for r in cleaned:
            if r.shape[1] != row_dim:
                raise EncodingError("all datasets must share one row schema")
        stacked = np.concatenate(cleaned, axis=0)
        self.row_mean_ = stacked.mean(axis=0)
        sd = stacked.std(axis=0)
        self.row_sd_ = np.where(sd < 1e-8, 1.0, sd)

        u = self.transform.forward(y)
        self.u_mean_ = u.mean(axis=0)
        usd = u.std(axis=0)
        self.u_sd_ = np.where(usd < 1e-8, 1.0, usd)
        theta_std = (u - self.u_mean_) / self.u_sd_

        self.architecture_ = NpeArchitecture(
            row_dim=row_dim,
            n_params=self.transform.n_params,
            summary_dim=self.summary_dim,
            cond_dim=self.cond_dim,
            encoder_width=self.encoder_width,
            trunk_width=self.trunk_width,
            m_components=self.m_components,
        )
        rows_std = [(r - self.row_mean_) / self.row_sd_ for r in cleaned]
        self.params_, self.loss_trace_ = train_npe(
            self.architecture_, rows_std, theta_std, cond, self.train_config, rng
        )
        self.n_features_in_ = row_dim
        return self

    # -- amortized inference -------------------------------------------

    def _check_conditions(self, conditions, n: int) -> np.ndarray:
        if self.cond_dim == 0:
            if conditions is not None and np.asarray(conditions).size:
                raise ValueError("model takes no conditions")
            return np.zeros((n, 0))
        if conditions is None:
            raise ValueError(f"model requires a condition of dimension {self.cond_dim}")
        cond = np.asarray(conditions, dtype=np.float64)
        if cond.ndim == 1:
            cond = np.tile(cond, (n, 1))
        if cond.shape != (n, self.cond_dim):
            raise ValueError(f"conditions must have shape ({n}, {self.cond_dim})")
        return cond

    def _prepare(self, rows) -> np.ndarray:
        check_fitted(self, "params_")
        rows = canonical_rows(rows)
        if rows.shape[1] != self.n_features_in_:
            raise EncodingError(
                f"dataset rows have {rows.shape[1]} features, model expects "
                f"{self.n_features_in_}"
            )
        return (rows - self.row_mean_) / self.row_sd_

    def summarize(self, rows) -> np.ndarray:
        """Deterministic summary vector; padding- and order-invariant."""
        return encode_summary(self.params_, self._prepare(rows))

    def _stats(self, rows, condition):
        summary = self.summarize(rows)
        cond = self._check_conditions(condition, 1)[0]
        return mixture_stats(self.params_, self.architecture_, summary, cond)

    def log_prob(self, rows, theta, condition=None) -> np.ndarray:
        """Natural-space posterior log density at the given parameters."""
        logits, means, log_std = self._stats(rows, condition)
        theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
        u = self.transform.forward(theta)
        u_std = (u - self.u_mean_) / self.u_sd_
        base = mixture_log_density(logits, means, log_std, u_std)
        return base - np.log(self.u_sd_).sum() + self.transform.log_abs_det_forward(theta)

    def sample_posterior(self, rows, n: int, rng: RngStream,
                         condition=None) -> PosteriorSample:
        """n ancestral draws mapped back to natural space, with densities."""
        logits, means, log_std = self._stats(rows, condition)
        draws_std = sample_mixture(logits, means, log_std, n, rng)
        base = mixture_log_density(logits, means, log_std, draws_std)
        u = draws_std * self.u_sd_ + self.u_mean_
        samples = self.transform.inverse(u)
        log_nat = base - np.log(self.u_sd_).sum() \
            + self.transform.log_abs_det_forward(samples)
        return PosteriorSample(samples=samples, log_density=log_nat)

    def posterior_mode(self, rows, n: int, rng: RngStream, condition=None) -> np.ndarray:
        """Highest-density draw among n posterior samples."""
        return self.sample_posterior(rows, n, rng, condition=condition).mode
