"""Deep-set summary encoder and Gaussian-mixture density head.

Everything is plain numpy with hand-derived gradients. The forward
pass caches activations; backward consumes the cache and returns a
gradient per parameter array. Datasets are ragged row sets, so batches
concatenate all rows and pool per-dataset via sorted segment ids.

Layout per parameter dict:
  enc.W1, enc.b1, enc.W2, enc.b2   per-row MLP (tanh)
  enc.W3, enc.b3, enc.W4, enc.b4   post-pool MLP (tanh, then linear)
  head.W1..head.b3                 trunk (tanh + dropout), output layer

The output layer emits, per mixture component: one weight logit, P
means and P log standard deviations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..randkit import RngStream

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class NpeArchitecture:
    row_dim: int
    n_params: int
    summary_dim: int
    cond_dim: int = 0
    encoder_width: int = 64
    trunk_width: int = 128
    m_components: int = 10

    def __post_init__(self) -> None:
        for name in ("row_dim", "n_params", "summary_dim", "encoder_width",
                     "trunk_width", "m_components"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cond_dim < 0:
            raise ValueError("cond_dim must be nonnegative")

    @property
    def head_out_dim(self) -> int:
        return self.m_components * (1 + 2 * self.n_params)

    def param_shapes(self) -> dict:
        ew, ds = self.encoder_width, self.summary_dim
        tw = self.trunk_width
        zin = ds + self.cond_dim
        return {
            "enc.W1": (self.row_dim, ew), "enc.b1": (ew,),
            "enc.W2": (ew, ew), "enc.b2": (ew,),
            "enc.W3": (ew, ew), "enc.b3": (ew,),
            "enc.W4": (ew, ds), "enc.b4": (ds,),
            "head.W1": (zin, tw), "head.b1": (tw,),
            "head.W2": (tw, tw), "head.b2": (tw,),
            "head.W3": (tw, self.head_out_dim), "head.b3": (self.head_out_dim,),
        }


def init_params(arch: NpeArchitecture, rng: RngStream) -> dict:
    """Fan-in scaled weights; mixture means spread over prior quantiles."""
    gen = rng.generator
    params = {}
    for name, shape in arch.param_shapes().items():
        if name.endswith(("b1", "b2", "b3", "b4")):
            params[name] = np.zeros(shape)
        else:
            params[name] = gen.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)
    M, P = arch.m_components, arch.n_params
    quantiles = stats.norm.ppf((np.arange(M) + 0.5) / M)
    b3 = params["head.b3"]
    b3[M : M + M * P] = np.repeat(quantiles, P)
    return params


def split_head_output(out: np.ndarray, arch: NpeArchitecture):
    M, P = arch.m_components, arch.n_params
    logits = out[:, :M]
    means = out[:, M : M + M * P].reshape(-1, M, P)
    log_std = out[:, M + M * P :].reshape(-1, M, P)
    return logits, means, log_std


@dataclass
class Batch:
    """One training batch: concatenated rows plus per-dataset targets."""

    rows: np.ndarray
    seg_starts: np.ndarray
    counts: np.ndarray
    cond: np.ndarray
    theta: np.ndarray

    @property
    def n_datasets(self) -> int:
        return self.counts.size


def make_batch(rows_list, theta, cond=None) -> Batch:
    counts = np.array([r.shape[0] for r in rows_list], dtype=np.int64)
    if np.any(counts == 0):
        raise ValueError("every dataset needs at least one non-padded row")
    rows = np.concatenate(rows_list, axis=0)
    seg_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    theta = np.asarray(theta, dtype=np.float64)
    B = counts.size
    if cond is None:
        cond = np.zeros((B, 0))
    cond = np.asarray(cond, dtype=np.float64)
    if theta.shape[0] != B or cond.shape[0] != B:
        raise ValueError("theta and cond must have one row per dataset")
    return Batch(rows=rows, seg_starts=seg_starts, counts=counts, cond=cond, theta=theta)


def _segment_mean(x, seg_starts, counts):
    sums = np.add.reduceat(x, seg_starts, axis=0)
    return sums / counts[:, None]


def forward_nll(params, arch: NpeArchitecture, batch: Batch, masks=None):
    """Mean negative log mixture density of the batch; returns (loss, cache)."""
    rows, cond, theta = batch.rows, batch.cond, batch.theta
    h1 = np.tanh(rows @ params["enc.W1"] + params["enc.b1"])
    h2 = np.tanh(h1 @ params["enc.W2"] + params["enc.b2"])
    pooled = _segment_mean(h2, batch.seg_starts, batch.counts)
    h3 = np.tanh(pooled @ params["enc.W3"] + params["enc.b3"])
    summary = h3 @ params["enc.W4"] + params["enc.b4"]
    z = np.concatenate([summary, cond], axis=1)
    t1 = np.tanh(z @ params["head.W1"] + params["head.b1"])
    t1d = t1 * masks[0] if masks is not None else t1
    t2 = np.tanh(t1d @ params["head.W2"] + params["head.b2"])
    t2d = t2 * masks[1] if masks is not None else t2
    out = t2d @ params["head.W3"] + params["head.b3"]

    logits, means, log_std = split_head_output(out, arch)
    sigma = np.exp(log_std)
    diff = (theta[:, None, :] - means) / sigma
    comp = -0.5 * (diff**2).sum(axis=2) - log_std.sum(axis=2) - 0.5 * arch.n_params * LOG_2PI
    lmax = logits.max(axis=1, keepdims=True)
    log_softmax = logits - lmax - np.log(np.exp(logits - lmax).sum(axis=1, keepdims=True))
    joint = log_softmax + comp
    jmax = joint.max(axis=1, keepdims=True)
    logq = (jmax + np.log(np.exp(joint - jmax).sum(axis=1, keepdims=True)))[:, 0]
    loss = -logq.mean()
    cache = dict(batch=batch, masks=masks, h1=h1, h2=h2, pooled=pooled, h3=h3,
                 z=z, t1=t1, t1d=t1d, t2=t2, t2d=t2d, logits=logits, means=means,
                 log_std=log_std, sigma=sigma, diff=diff, joint=joint, logq=logq)
    return loss, cache


def backward_nll(params, arch: NpeArchitecture, cache) -> dict:
    batch = cache["batch"]
    masks = cache["masks"]
    B = batch.n_datasets
    # responsibilities: softmax over the joint component log densities
    resp = np.exp(cache["joint"] - cache["logq"][:, None])
    d_joint = -resp / B
    diff, sigma, log_std = cache["diff"], cache["sigma"], cache["log_std"]
    d_means = d_joint[:, :, None] * (diff / sigma)
    d_log_std = d_joint[:, :, None] * (diff**2 - 1.0)
    sm = np.exp(cache["logits"] - cache["logits"].max(axis=1, keepdims=True))
    sm /= sm.sum(axis=1, keepdims=True)
    d_logits = d_joint - sm * d_joint.sum(axis=1, keepdims=True)
    M, P = arch.m_components, arch.n_params
    d_out = np.concatenate(
        [d_logits, d_means.reshape(B, M * P), d_log_std.reshape(B, M * P)], axis=1
    )

    grads = {}
    t2d, t2, t1d, t1, z = cache["t2d"], cache["t2"], cache["t1d"], cache["t1"], cache["z"]
    grads["head.W3"] = t2d.T @ d_out
    grads["head.b3"] = d_out.sum(axis=0)
    d_t2d = d_out @ params["head.W3"].T
    d_t2 = d_t2d * masks[1] if masks is not None else d_t2d
    d_a2 = d_t2 * (1.0 - t2**2)
    grads["head.W2"] = t1d.T @ d_a2
    grads["head.b2"] = d_a2.sum(axis=0)
    d_t1d = d_a2 @ params["head.W2"].T
    d_t1 = d_t1d * masks[0] if masks is not None else d_t1d
    d_a1 = d_t1 * (1.0 - t1**2)
    grads["head.W1"] = z.T @ d_a1
    grads["head.b1"] = d_a1.sum(axis=0)
    d_z = d_a1 @ params["head.W1"].T
    d_summary = d_z[:, : arch.summary_dim]

    h3, pooled, h2, h1 = cache["h3"], cache["pooled"], cache["h2"], cache["h1"]
    grads["enc.W4"] = h3.T @ d_summary
    grads["enc.b4"] = d_summary.sum(axis=0)
    d_h3 = d_summary @ params["enc.W4"].T
    d_a3 = d_h3 * (1.0 - h3**2)
    grads["enc.W3"] = pooled.T @ d_a3
    grads["enc.b3"] = d_a3.sum(axis=0)
    d_pooled = d_a3 @ params["enc.W3"].T
    seg = np.repeat(np.arange(B), batch.counts)
    d_h2 = d_pooled[seg] / batch.counts[seg][:, None]
    d_b2 = d_h2 * (1.0 - h2**2)
    grads["enc.W2"] = h1.T @ d_b2
    grads["enc.b2"] = d_b2.sum(axis=0)
    d_h1 = d_b2 @ params["enc.W2"].T
    d_b1 = d_h1 * (1.0 - h1**2)
    grads["enc.W1"] = batch.rows.T @ d_b1
    grads["enc.b1"] = d_b1.sum(axis=0)
    return grads


def encode_summary(params, rows: np.ndarray) -> np.ndarray:
    """Summary vector of one dataset's (already standardized) rows."""
    h1 = np.tanh(rows @ params["enc.W1"] + params["enc.b1"])
    h2 = np.tanh(h1 @ params["enc.W2"] + params["enc.b2"])
    pooled = h2.mean(axis=0, keepdims=True)
    h3 = np.tanh(pooled @ params["enc.W3"] + params["enc.b3"])
    return (h3 @ params["enc.W4"] + params["enc.b4"])[0]


def mixture_stats(params, arch: NpeArchitecture, summary: np.ndarray,
                  cond: np.ndarray):
    """Mixture parameters for one dataset (no dropout)."""
    z = np.concatenate([summary, cond])[None, :]
    t1 = np.tanh(z @ params["head.W1"] + params["head.b1"])
    t2 = np.tanh(t1 @ params["head.W2"] + params["head.b2"])
    out = t2 @ params["head.W3"] + params["head.b3"]
    logits, means, log_std = split_head_output(out, arch)
    return logits[0], means[0], log_std[0]


def mixture_log_density(logits, means, log_std, theta: np.ndarray) -> np.ndarray:
    """log q(theta) for (n, P) points under one mixture; stabilized."""
    theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    sigma = np.exp(log_std)
    diff = (theta[:, None, :] - means[None, :, :]) / sigma[None, :, :]
    comp = -0.5 * (diff**2).sum(axis=2) - log_std.sum(axis=1)[None, :] \
        - 0.5 * theta.shape[1] * LOG_2PI
    lmax = logits.max()
    log_w = logits - lmax - np.log(np.exp(logits - lmax).sum())
    joint = log_w[None, :] + comp
    jmax = joint.max(axis=1, keepdims=True)
    return (jmax + np.log(np.exp(joint - jmax).sum(axis=1, keepdims=True)))[:, 0]


def sample_mixture(logits, means, log_std, n: int, rng: RngStream) -> np.ndarray:
    """Ancestral draws from one mixture: component, then Gaussian."""
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    gen = rng.generator
    lmax = logits.max()
    w = np.exp(logits - lmax)
    w /= w.sum()
    comp = gen.choice(w.size, size=n, p=w)
    eps = gen.standard_normal((n, means.shape[1]))
    return means[comp] + np.exp(log_std[comp]) * eps
