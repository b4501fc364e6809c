"""Training loop: AdamW with cosine learning-rate decay, early stopping,
and a finite-difference gradient checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import EstimationError
from ..randkit import RngStream
from .network import Batch, NpeArchitecture, backward_nll, forward_nll, init_params, make_batch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 5e-4
    weight_decay: float = 1e-4
    dropout: float = 0.1
    val_fraction: float = 0.15
    early_stop: bool = True
    patience: int = 20

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError("dropout must lie in [0, 1]")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")


class AdamW:
    """Adam with decoupled weight decay; state kept per parameter name."""

    def __init__(self, params, weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g**2
            update = (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
            p -= lr * (update + self.weight_decay * p)


def cosine_lr(base_lr: float, step: int, total_steps: int) -> float:
    if total_steps <= 0:
        return base_lr
    frac = min(max(step / total_steps, 0.0), 1.0)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * frac))


def _dropout_masks(arch: NpeArchitecture, n: int, p: float, gen):
    if p <= 0.0:
        return None
    if p >= 1.0:
        return (np.zeros((n, arch.trunk_width)), np.zeros((n, arch.trunk_width)))
    keep = 1.0 - p
    m1 = (gen.random((n, arch.trunk_width)) >= p) / keep
    m2 = (gen.random((n, arch.trunk_width)) >= p) / keep
    return (m1, m2)


@dataclass
class LossTrace:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    smoothed: list = field(default_factory=list)
    stopped_epoch: int | None = None


def _eval_nll(params, arch, rows_list, theta, cond, idx, batch_size) -> float:
    total, n = 0.0, 0
    for start in range(0, idx.size, batch_size):
        sel = idx[start : start + batch_size]
        batch = make_batch([rows_list[i] for i in sel], theta[sel], cond[sel])
        loss, _ = forward_nll(params, arch, batch)
        total += loss * sel.size
        n += sel.size
    return total / n


def train_npe(arch: NpeArchitecture, rows_list, theta, cond, cfg: TrainConfig,
              rng: RngStream):
    """Minimize mean NLL; returns (params, LossTrace).

    Substreams: 0 = train/val split, 1 = init, 2 = batch shuffling,
    3 = dropout. With early stopping the returned weights are the best
    validation snapshot, otherwise the final ones.
    """
    n = len(rows_list)
    theta = np.asarray(theta, dtype=np.float64)
    if cond is None:
        cond = np.zeros((n, 0))
    cond = np.asarray(cond, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[0] != n or cond.shape[0] != n:
        raise ValueError("need one theta row and one condition row per dataset")
    if theta.shape[1] != arch.n_params:
        raise ValueError(f"theta has {theta.shape[1]} columns, expected {arch.n_params}")

    perm = rng.child(0).generator.permutation(n)
    n_val = max(1, int(round(cfg.val_fraction * n)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size < 2 * cfg.batch_size:
        raise ValueError(
            f"{train_idx.size} training pairs is fewer than two batches of {cfg.batch_size}"
        )

    params = init_params(arch, rng.child(1))
    best = {k: v.copy() for k, v in params.items()}
    trace = LossTrace()
    if cfg.epochs == 0:
        return best, trace

    opt = AdamW(params, weight_decay=cfg.weight_decay)
    shuffle_rng = rng.child(2)
    drop_gen = rng.child(3).generator
    steps_per_epoch = math.ceil(train_idx.size / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    best_val = np.inf
    since_best = 0
    step = 0

    for epoch in range(cfg.epochs):
        order = train_idx[shuffle_rng.child(epoch).generator.permutation(train_idx.size)]
        epoch_loss, seen = 0.0, 0
        for start in range(0, order.size, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            batch = make_batch([rows_list[i] for i in sel], theta[sel], cond[sel])
            masks = _dropout_masks(arch, sel.size, cfg.dropout, drop_gen)
            loss, cache = forward_nll(params, arch, batch, masks)
            if not np.isfinite(loss):
                norms = {k: float(np.linalg.norm(v)) for k, v in params.items()}
                raise EstimationError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}; "
                    f"parameter norms: {norms}"
                )
            grads = backward_nll(params, arch, cache)
            opt.step(params, grads, cosine_lr(cfg.learning_rate, step, total_steps))
            step += 1
            epoch_loss += loss * sel.size
            seen += sel.size
        trace.train.append(epoch_loss / seen)
        val_loss = _eval_nll(params, arch, rows_list, theta, cond, val_idx, cfg.batch_size)
        trace.val.append(val_loss)
        trace.smoothed.append(min(val_loss, trace.smoothed[-1]) if trace.smoothed else val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best = {k: v.copy() for k, v in params.items()}
            since_best = 0
        else:
            since_best += 1
        if cfg.early_stop and since_best >= cfg.patience:
            trace.stopped_epoch = epoch
            break

    return (best if cfg.early_stop else params), trace


def grad_check(params, arch: NpeArchitecture, batch: Batch, eps: float = 1e-5,
               max_per_array: int = 12, rng: RngStream | None = None) -> float:
    """Max relative error of analytic NLL gradients vs central differences.

    A subset of weights per array is probed. The denominator has an
    absolute floor so components whose true gradient is numerically
    zero do not register as spurious failures.
    """
    if batch.n_datasets == 0:
        raise ValueError("batch must be nonempty")
    _, cache = forward_nll(params, arch, batch)
    grads = backward_nll(params, arch, cache)
    gen = (rng or RngStream(0, 0)).generator
    worst = 0.0
    for name in sorted(params):
        flat = params[name].reshape(-1)
        g = grads[name].reshape(-1)
        k = min(max_per_array, flat.size)
        idx = gen.choice(flat.size, size=k, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            up, _ = forward_nll(params, arch, batch)
            flat[i] = orig - eps
            down, _ = forward_nll(params, arch, batch)
            flat[i] = orig
            fd = (up - down) / (2.0 * eps)
            rel = abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-4)
            worst = max(worst, rel)
    return worst
