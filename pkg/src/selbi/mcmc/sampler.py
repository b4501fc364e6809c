"""Adaptive random-walk Metropolis with block updates.

The target is any callable ``x -> log posterior``. Targets may
additionally expose ``block_terms(x, block_id)`` returning only the
log-posterior terms that depend on that block's coordinates; block
acceptance ratios then skip the unaffected terms, which is what makes
latent-block updates affordable for models with many independent
groups. Correctness does not depend on the split: the terms that are
omitted are identical under both states and cancel in the ratio.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np

from ..randkit import RngStream

TARGET_ACCEPT = 0.234


@dataclass
class ProposalLog:
    """Per-proposal record for detailed-balance checks."""

    block: list = field(default_factory=list)
    x_from: list = field(default_factory=list)
    x_to: list = field(default_factory=list)
    log_ratio: list = field(default_factory=list)
    log_u: list = field(default_factory=list)
    accepted: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.accepted)


@dataclass
class Chain:
    """One sampler run: post-burn-in states plus bookkeeping.

    draws has one row per recorded state; with steps=0 the single row
    is the initial state. proposal_scale is the final per-coordinate
    standard deviation of the diagonal proposal.
    """

    draws: np.ndarray
    logpost: np.ndarray
    acceptance_rate: float
    proposal_scale: np.ndarray
    acceptance_by_block: np.ndarray
    n_burn_in: int
    warnings: list
    proposals: ProposalLog | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError(f"acceptance rate must be in [0,1], got {self.acceptance_rate}")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]


def _check_blocks(blocks, dim: int) -> list:
    out = []
    seen = np.zeros(dim, dtype=bool)
    for b, idx in enumerate(blocks):
        idx = np.asarray(idx, dtype=np.int64).ravel()
        if idx.size == 0:
            raise ValueError(f"block {b} is empty")
        if np.any((idx < 0) | (idx >= dim)):
            raise ValueError(f"block {b} has indices outside [0, {dim})")
        if np.any(seen[idx]):
            raise ValueError(f"block {b} overlaps an earlier block")
        seen[idx] = True
        out.append(idx)
    return out


def metropolis_sample(target, init, steps: int, rng: RngStream, *,
                      blocks=None, burn_in: int = 0, scales=None,
                      init_scale: float = 0.5, target_accept: float = TARGET_ACCEPT,
                      adapt_window: int = 50, adapt_rate: float = 1.0,
                      scale_floor: float = 1e-8, resync_every: int = 1000,
                      record_proposals: bool = False) -> Chain:
    """Run one chain of block-wise random-walk Metropolis.

    Each sweep proposes every block once with an independent normal
    step. Per-block scalar step sizes adapt toward ``target_accept``
    during burn-in only (log-scale nudges every ``adapt_window``
    proposals), so the post-burn-in kernel is a fixed, valid
    Metropolis kernel. steps counts sweeps; the recorded draws are the
    states after each post-burn-in sweep, except steps=0 which records
    the initial state alone.
    """
    init = np.asarray(init, dtype=np.float64)
    if init.ndim != 1:
        raise ValueError(f"init must be a flat vector, got shape {init.shape}")
    if not np.all(np.isfinite(init)):
        raise ValueError("init must be finite")
    steps = int(steps)
    burn_in = int(burn_in)
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    if steps > 0 and not 0 <= burn_in < steps:
        raise ValueError(f"need 0 <= burn_in < steps, got burn_in={burn_in} steps={steps}")

    dim = init.size
    blocks = _check_blocks(blocks if blocks is not None else [np.arange(dim)], dim)
    n_blocks = len(blocks)
    if scales is None:
        scale = np.full(n_blocks, float(init_scale))
    else:
        scale = np.asarray(scales, dtype=np.float64).ravel().copy()
        if scale.size != n_blocks:
            raise ValueError(f"need one scale per block ({n_blocks}), got {scale.size}")
    if np.any(scale <= 0):
        raise ValueError("proposal scales must be positive")

    block_terms = getattr(target, "block_terms", None)

    def _terms(x, b):
        if block_terms is not None:
            return block_terms(x, b)
        return target(x)

    # blocks whose terms are mutually independent can share one
    # vectorized proposal round per sweep; recording forces the
    # sequential path so the proposal log stays one-entry-per-decision
    batch_fn = getattr(target, "block_terms_batch", None)
    indep = frozenset(getattr(target, "independent_blocks", ()))
    if batch_fn is None or record_proposals:
        indep = frozenset()
    if indep and (min(indep) < 0 or max(indep) >= n_blocks):
        raise ValueError("target.independent_blocks does not match the block list")
    seq_ids = [b for b in range(n_blocks) if b not in indep]
    batch_ids = np.array([b for b in range(n_blocks) if b in indep], dtype=np.int64)
    if batch_ids.size:
        batch_sizes = np.array([blocks[b].size for b in batch_ids])
        batch_concat = np.concatenate([blocks[b] for b in batch_ids])

    lp = float(target(init))
    if not math.isfinite(lp):
        raise ValueError(f"log posterior at init must be finite, got {lp}")

    x = init.copy()
    gen = rng.generator
    log = ProposalLog() if record_proposals else None
    chain_warnings: list = []
    floor_warned = np.zeros(n_blocks, dtype=bool)

    win_acc = np.zeros(n_blocks, dtype=np.int64)
    win_prop = np.zeros(n_blocks, dtype=np.int64)
    post_acc = np.zeros(n_blocks, dtype=np.int64)
    post_prop = np.zeros(n_blocks, dtype=np.int64)

    n_rec = 1 if steps == 0 else steps - burn_in
    draws = np.empty((n_rec, dim))
    trace = np.empty(n_rec)
    if steps == 0:
        draws[0] = x
        trace[0] = lp

    def _bookkeep(b: int, accept: bool, step: int) -> None:
        if step <= burn_in:
            win_prop[b] += 1
            win_acc[b] += accept
            if win_prop[b] == adapt_window:
                rate = win_acc[b] / win_prop[b]
                scale[b] *= math.exp(adapt_rate * (rate - target_accept))
                if scale[b] < scale_floor:
                    scale[b] = scale_floor
                    if win_acc[b] == 0 and not floor_warned[b]:
                        msg = (f"block {b}: all {adapt_window} proposals rejected and "
                               f"step size pinned at floor {scale_floor:g}")
                        chain_warnings.append(msg)
                        _warnings.warn(msg, RuntimeWarning, stacklevel=3)
                        floor_warned[b] = True
                win_acc[b] = 0
                win_prop[b] = 0
        else:
            post_prop[b] += 1
            post_acc[b] += accept

    rec = 0
    for step in range(1, steps + 1):
        for b in seq_ids:
            idx = blocks[b]
            z = gen.standard_normal(idx.size)
            x_new = x.copy()
            x_new[idx] += scale[b] * z
            delta = _terms(x_new, b) - _terms(x, b)
            log_u = np.log(gen.random())
            accept = bool(log_u < delta)
            if log is not None:
                log.block.append(b)
                log.x_from.append(x.copy())
                log.x_to.append(x_new)
                log.log_ratio.append(float(delta))
                log.log_u.append(float(log_u))
                log.accepted.append(accept)
            if accept:
                x = x_new
                lp += delta
            _bookkeep(b, accept, step)
        if batch_ids.size:
            z = gen.standard_normal(batch_concat.size)
            x_prop = x.copy()
            x_prop[batch_concat] += np.repeat(scale[batch_ids], batch_sizes) * z
            t_old = np.asarray(batch_fn(x, batch_ids), dtype=np.float64)
            t_new = np.asarray(batch_fn(x_prop, batch_ids), dtype=np.float64)
            with np.errstate(invalid="ignore"):
                deltas = t_new - t_old
            accepts = np.log(gen.random(batch_ids.size)) < deltas
            for k in np.nonzero(accepts)[0]:
                idx = blocks[batch_ids[k]]
                x[idx] = x_prop[idx]
                lp += deltas[k]
            for k, b in enumerate(batch_ids):
                _bookkeep(int(b), bool(accepts[k]), step)
        if step > burn_in:
            if resync_every and (step - burn_in) % resync_every == 0:
                lp = float(target(x))
            draws[rec] = x
            trace[rec] = lp
            rec += 1

    total_prop = int(post_prop.sum())
    acc_rate = float(post_acc.sum() / total_prop) if total_prop else 0.0
    with np.errstate(invalid="ignore"):
        by_block = np.where(post_prop > 0, post_acc / np.maximum(post_prop, 1), 0.0)
    sd = np.zeros(dim)
    for b, idx in enumerate(blocks):
        sd[idx] = scale[b]
    return Chain(draws=draws, logpost=trace, acceptance_rate=acc_rate,
                 proposal_scale=sd, acceptance_by_block=by_block,
                 n_burn_in=burn_in, warnings=chain_warnings, proposals=log)


def run_chains(target, init, rng: RngStream, *, n_chains: int = 4,
               draws: int = 5000, burn_in: int = 1000, **kwargs) -> list:
    """Independent chains on substreams; defaults 4 chains x 5000 draws.

    init may be a flat vector shared by all chains, an (n_chains, dim)
    array of per-chain starts, or a callable (chain_index, rng) -> x0.
    Chain c draws its randomness from rng.child(c) (init jitter from
    child(c).child(0), sampling from child(c).child(1)), so chains are
    reproducible independently of execution order.
    """
    if n_chains < 1:
        raise ValueError(f"need at least one chain, got {n_chains}")
    out = []
    for c in range(n_chains):
        sub = rng.child(c)
        if callable(init):
            x0 = init(c, sub.child(0))
        else:
            arr = np.asarray(init, dtype=np.float64)
            x0 = arr[c] if arr.ndim == 2 else arr
        out.append(metropolis_sample(target, x0, burn_in + draws, sub.child(1),
                                     burn_in=burn_in, **kwargs))
    return out
