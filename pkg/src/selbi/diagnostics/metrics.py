"""Scalar posterior-quality metrics."""

import numpy as np


def posterior_contraction(prior_samples, posterior_samples) -> np.ndarray:
    """Per-parameter 1 - var(posterior)/var(prior), clamped at zero.

    Both sample sets should live in the same (unconstrained) space;
    the value is invariant under any affine map applied to both. Zero
    means the data did not narrow the prior, one a point mass.
    """
    prior = np.atleast_2d(np.asarray(prior_samples, dtype=np.float64))
    post = np.atleast_2d(np.asarray(posterior_samples, dtype=np.float64))
    if prior.shape[1] != post.shape[1]:
        raise ValueError(f"parameter count mismatch: {prior.shape[1]} vs {post.shape[1]}")
    if prior.shape[0] < 2 or post.shape[0] < 2:
        raise ValueError("need at least 2 samples in each set")
    var_prior = prior.var(axis=0, ddof=1)
    if (var_prior <= 0).any():
        raise ValueError("prior variance must be positive for every parameter")
    return np.maximum(1.0 - post.var(axis=0, ddof=1) / var_prior, 0.0)
