"""Convergence checks: rank-normalized split-R-hat and ESS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special, stats


@dataclass
class ChainDiagnostics:
    r_hat: np.ndarray
    ess: np.ndarray
    n_chains: int
    n_draws: int
    param_names: tuple
    flags: list

    @property
    def n_params(self) -> int:
        return self.r_hat.size


def _stack(chains) -> np.ndarray:
    arrs = []
    for c in chains:
        a = np.asarray(getattr(c, "draws", c), dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2:
            raise ValueError(f"each chain must be a (draws, params) array, got {a.shape}")
        arrs.append(a)
    shapes = {a.shape for a in arrs}
    if len(shapes) != 1:
        raise ValueError(f"chains must have identical shapes, got {sorted(shapes)}")
    return np.stack(arrs)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    # average ranks for ties, then normal scores (offset 3/8 rule)
    r = stats.rankdata(x.ravel(), method="average")
    z = special.ndtri((r - 0.375) / (x.size + 0.25))
    return z.reshape(x.shape)


def _autocov(z: np.ndarray) -> np.ndarray:
    """Biased autocovariance per row of (chains, draws), via FFT."""
    m, n = z.shape
    zc = z - z.mean(axis=1, keepdims=True)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(zc, n=size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, :n].real
    return acov / n


def _split_rhat_ess(z: np.ndarray):
    """z: rank-normalized draws (chains, draws). Returns (rhat, ess)."""
    c, n = z.shape
    half = n // 2
    s = np.concatenate([z[:, :half], z[:, n - half:n]], axis=0)
    m, n2 = s.shape
    chain_var = s.var(axis=1, ddof=1)
    chain_mean = s.mean(axis=1)
    w = chain_var.mean()
    b_over_n = chain_mean.var(ddof=1)
    var_plus = (n2 - 1) / n2 * w + b_over_n
    if w <= 0.0:
        return np.inf, np.nan
    rhat = float(np.sqrt(var_plus / w))

    acov = _autocov(s).mean(axis=0)
    rho = 1.0 - (w - acov) / var_plus
    # Geyer: truncate at the first nonpositive even/odd pair sum, then
    # enforce a nonincreasing sequence of pair sums
    n_pairs = n2 // 2
    pair = rho[0:2 * n_pairs:2] + rho[1:2 * n_pairs:2]
    tau = -1.0
    prev = np.inf
    for p in pair:
        if p <= 0.0:
            break
        prev = min(prev, p)
        tau += 2.0 * prev
    tau = max(tau, 1e-12)
    ess = float(min(m * n2 / tau, float(m * n2)))
    return rhat, ess


def chain_diagnostics(chains, param_names=None, min_draws: int = 100) -> ChainDiagnostics:
    """Rank-normalized split-R-hat and autocorrelation-truncated ESS.

    Accepts a list of Chain objects or (draws, params) arrays. Needs at
    least two chains of at least min_draws draws each. Parameters whose
    pooled draws are a single constant have no defined rank-normal
    scores; their R-hat and ESS are NaN and a flag records it.
    """
    x = _stack(chains)
    n_chains, n_draws, n_params = x.shape
    if n_chains < 2:
        raise ValueError(f"need at least 2 chains, got {n_chains}")
    if n_draws < min_draws:
        raise ValueError(f"need at least {min_draws} draws per chain, got {n_draws}")
    if param_names is None:
        param_names = tuple(f"x{j}" for j in range(n_params))
    else:
        param_names = tuple(param_names)
        if len(param_names) != n_params:
            raise ValueError(f"expected {n_params} names, got {len(param_names)}")

    r_hat = np.empty(n_params)
    ess = np.empty(n_params)
    flags: list = []
    for j in range(n_params):
        col = x[:, :, j]
        if np.all(col == col.ravel()[0]):
            r_hat[j] = np.nan
            ess[j] = np.nan
            flags.append(f"{param_names[j]}: constant draws, R-hat/ESS undefined")
            continue
        rh, e = _split_rhat_ess(_rank_normalize(col))
        r_hat[j] = rh
        ess[j] = e
        if not np.isfinite(rh):
            flags.append(f"{param_names[j]}: zero within-chain variance, R-hat infinite")
        if not np.isfinite(e):
            flags.append(f"{param_names[j]}: ESS undefined")
    return ChainDiagnostics(r_hat=r_hat, ess=ess, n_chains=n_chains, n_draws=n_draws,
                            param_names=param_names, flags=flags)
