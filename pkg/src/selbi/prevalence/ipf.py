"""Iterative proportional fitting (raking) of per-record weights."""

from __future__ import annotations

import numpy as np

from ..errors import ConvergenceError
from .schema import MISSING, MarginTable


def _margin_gap(cov: np.ndarray, w: np.ndarray, margins: MarginTable):
    """Worst absolute gap between weighted marginals and targets."""
    total = w.sum()
    worst = 0.0
    where = ("", 0)
    for d, (name, target) in enumerate(zip(margins.dims, margins.probs)):
        for c, t in enumerate(target):
            cur = w[cov[:, d] == c].sum() / total
            gap = abs(cur - t)
            if gap > worst:
                worst, where = gap, (name, c)
    return worst, where


def ipf_weights(
    covariates: np.ndarray,
    margins: MarginTable,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> np.ndarray:
    """Rake per-record weights until sample marginals match all targets.

    Parameters
    ----------
    covariates : ndarray of shape (n, n_dims)
        Complete integer codes aligned with ``margins.dims``.
    margins : MarginTable
        Target probability vector per dimension.
    tol : float
        Maximum absolute margin gap accepted, across all dimensions
        and categories simultaneously.
    max_iter : int
        Full raking sweeps before giving up.

    Returns
    -------
    ndarray of shape (n,)
        Positive weights normalized to mean 1.

    Raises
    ------
    ConvergenceError
        If a populated margin category is empty in the sample, or the
        sweep budget is exhausted; the message reports the worst gap.
    """
    cov = np.asarray(covariates, dtype=np.int64)
    if cov.ndim != 2 or cov.shape[1] != len(margins.dims):
        raise ValueError(f"covariates must have shape (n, {len(margins.dims)})")
    if np.any(cov == MISSING):
        raise ValueError("covariates contain missing codes; impute before raking")
    n = cov.shape[0]

    masks = []
    for d, (name, target) in enumerate(zip(margins.dims, margins.probs)):
        col = cov[:, d]
        if np.any((col < 0) | (col >= target.size)):
            raise ValueError(f"codes outside margin support in dimension {name}")
        dim_masks = []
        for c, t in enumerate(target):
            mask = col == c
            if t > 0 and not mask.any():
                raise ConvergenceError(
                    f"margin category {name}={c} (target {t:g}) has no sample members"
                )
            if t == 0 and mask.any():
                raise ValueError(f"margin gives zero probability to populated category {name}={c}")
            dim_masks.append(mask)
        masks.append(dim_masks)

    w = np.ones(n, dtype=np.float64)
    for _ in range(max_iter):
        for d, target in enumerate(margins.probs):
            # classic raking: one simultaneous rescale per dimension,
            # computed from the weights before touching this dimension
            total = w.sum()
            factors = np.ones_like(target)
            for c, t in enumerate(target):
                cur = w[masks[d][c]].sum()
                if t > 0 and cur > 0:
                    factors[c] = t * total / cur
            w *= factors[cov[:, d]]
        gap, (name, c) = _margin_gap(cov, w, margins)
        if gap < tol:
            return w * (n / w.sum())
    raise ConvergenceError(
        f"raking did not converge in {max_iter} sweeps; worst margin gap "
        f"{gap:.3e} at {name}={c}"
    )
