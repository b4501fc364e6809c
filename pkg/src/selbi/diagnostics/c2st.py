"""Classifier two-sample test between posterior-data and joint pairs.

A small MLP is cross-validated to distinguish (theta, summary) pairs
built from the learned posterior from pairs simulated directly from
the joint model. Chance-level accuracy indicates the two distributions
match; the permutation p-value quantifies significance for a single
observed dataset.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..randkit import RngStream

IMBALANCE_LIMIT = 0.6
HIGH_VARIANCE_N = 100
UNITS = ("fold", "pair")


def c2st_statistic(accuracies) -> float:
    """Mean squared deviation of accuracies from chance."""
    a = np.asarray(accuracies, dtype=np.float64)
    if a.size == 0:
        raise ValueError("need at least one accuracy")
    return float(np.mean((a - 0.5) ** 2))


@dataclass
class C2stResult:
    accuracies: np.ndarray
    unit: str
    n_pairs: int
    high_variance: bool
    t_perm: np.ndarray | None = None
    p_value: float | None = None

    @property
    def t_obs(self) -> float:
        return c2st_statistic(self.accuracies)

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))


def _mlp_widths(dim: int) -> int:
    # two hidden layers, each strictly wider than 10x the input
    return 10 * dim + 2


def _fit_classifier(x, y, x_val, y_val, rng: RngStream, epochs: int, patience: int):
    """Full-batch AdamW on logistic loss; returns best-epoch val predictions."""
    d = x.shape[1]
    w = _mlp_widths(d)
    gen = rng.generator
    params = {
        "W1": gen.normal(0.0, 1.0 / np.sqrt(d), size=(d, w)),
        "b1": np.zeros(w),
        "W2": gen.normal(0.0, 1.0 / np.sqrt(w), size=(w, w)),
        "b2": np.zeros(w),
        "W3": gen.normal(0.0, 1.0 / np.sqrt(w), size=(w, 1)),
        "b3": np.zeros(1),
    }
    state = {k: (np.zeros_like(v), np.zeros_like(v)) for k, v in params.items()}
    lr, beta1, beta2, eps_opt, wd = 5e-3, 0.9, 0.999, 1e-8, 1e-4
    n = x.shape[0]
    best_loss, best_logits, bad = np.inf, None, 0
    for epoch in range(epochs):
        h1 = np.tanh(x @ params["W1"] + params["b1"])
        h2 = np.tanh(h1 @ params["W2"] + params["b2"])
        logits = (h2 @ params["W3"] + params["b3"])[:, 0]
        p = expit(logits)
        d_logit = (p - y)[:, None] / n
        grads = {
            "W3": h2.T @ d_logit, "b3": d_logit.sum(axis=0),
        }
        d_h2 = d_logit @ params["W3"].T * (1 - h2**2)
        grads["W2"] = h1.T @ d_h2
        grads["b2"] = d_h2.sum(axis=0)
        d_h1 = d_h2 @ params["W2"].T * (1 - h1**2)
        grads["W1"] = x.T @ d_h1
        grads["b1"] = d_h1.sum(axis=0)
        t = epoch + 1
        for k, g in grads.items():
            m1, m2 = state[k]
            m1 *= beta1
            m1 += (1 - beta1) * g
            m2 *= beta2
            m2 += (1 - beta2) * g * g
            mhat = m1 / (1 - beta1**t)
            vhat = m2 / (1 - beta2**t)
            params[k] -= lr * (mhat / (np.sqrt(vhat) + eps_opt) + wd * params[k])
        v1 = np.tanh(x_val @ params["W1"] + params["b1"])
        v2 = np.tanh(v1 @ params["W2"] + params["b2"])
        val_logits = (v2 @ params["W3"] + params["b3"])[:, 0]
        pv = np.clip(expit(val_logits), 1e-12, 1 - 1e-12)
        val_loss = -np.mean(y_val * np.log(pv) + (1 - y_val) * np.log(1 - pv))
        if val_loss < best_loss - 1e-9:
            best_loss, best_logits, bad = val_loss, val_logits.copy(), 0
        else:
            bad += 1
            if bad > patience:
                break
    return best_logits


def _stratified_folds(y: np.ndarray, folds: int, gen) -> np.ndarray:
    """Fold assignment per example, class-balanced by round-robin deal."""
    assign = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[gen.permutation(idx.size)]
        assign[idx] = np.arange(idx.size) % folds
    return assign


def _cv_accuracies(x: np.ndarray, y: np.ndarray, folds: int, rng: RngStream,
                   unit: str, epochs: int, patience: int):
    assign = _stratified_folds(y, folds, rng.child(0).generator)
    fold_acc = []
    pair_correct = np.empty(y.size)
    for k in range(folds):
        test = assign == k
        logits = _fit_classifier(x[~test], y[~test], x[test], y[test],
                                 rng.child(1 + k), epochs, patience)
        correct = (logits > 0).astype(np.float64) == y[test]
        fold_acc.append(correct.mean())
        pair_correct[test] = correct
    if unit == "fold":
        return np.array(fold_acc)
    return pair_correct


def c2st(posterior_pairs, joint_pairs, folds: int = 5, rng: RngStream | None = None,
         unit: str = "fold", epochs: int = 100, patience: int = 10) -> C2stResult:
    """Cross-validated accuracy of a posterior-vs-joint classifier.

    ``unit`` selects what each reported accuracy indexes: held-out fold
    means for aggregate checks, or per-pair 0/1 correctness when the
    test statistic should sum over parameter-data pairs.
    """
    if unit not in UNITS:
        raise ValueError(f"unit must be one of {UNITS}, got {unit!r}")
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    xp = np.atleast_2d(np.asarray(posterior_pairs, dtype=np.float64))
    xj = np.atleast_2d(np.asarray(joint_pairs, dtype=np.float64))
    if xp.shape[1] != xj.shape[1]:
        raise ValueError(f"pair dimension mismatch: {xp.shape[1]} vs {xj.shape[1]}")
    n = xp.shape[0] + xj.shape[0]
    frac = xp.shape[0] / n
    if not (1 - IMBALANCE_LIMIT) <= frac <= IMBALANCE_LIMIT:
        raise ValueError(
            f"class imbalance {frac:.2f} outside [{1 - IMBALANCE_LIMIT}, {IMBALANCE_LIMIT}]")
    if n < 2 * folds:
        raise ValueError(f"need at least {2 * folds} pairs, got {n}")
    rng = rng or RngStream(0xC257, 0)
    x = np.vstack([xp, xj])
    y = np.concatenate([np.ones(xp.shape[0]), np.zeros(xj.shape[0])])
    mu, sd = x.mean(axis=0), x.std(axis=0)
    x = (x - mu) / np.where(sd < 1e-12, 1.0, sd)
    acc = _cv_accuracies(x, y, folds, rng, unit, epochs, patience)
    return C2stResult(accuracies=acc, unit=unit, n_pairs=n,
                      high_variance=n < HIGH_VARIANCE_N)


def c2st_pvalue(posterior_pairs, joint_pairs, observed: C2stResult,
                n_permutations: int = 10, rng: RngStream | None = None,
                folds: int = 5, epochs: int = 100, patience: int = 10) -> C2stResult:
    """Permutation p-value: retrain on label-shuffled data and compare.

    p = (1/B) sum_b 1(T_b >= T_obs), so p lies on {0, 1/B, ..., 1}.
    """
    if n_permutations < 1:
        raise ValueError(f"n_permutations must be >= 1, got {n_permutations}")
    rng = rng or RngStream(0xC257, 1)
    xp = np.atleast_2d(np.asarray(posterior_pairs, dtype=np.float64))
    xj = np.atleast_2d(np.asarray(joint_pairs, dtype=np.float64))
    pooled = np.vstack([xp, xj])
    n_pos = xp.shape[0]
    t_perm = np.empty(n_permutations)
    for b in range(n_permutations):
        perm = rng.child(b).child(0).generator.permutation(pooled.shape[0])
        shuffled = pooled[perm]
        result = c2st(shuffled[:n_pos], shuffled[n_pos:], folds=folds,
                      rng=rng.child(b).child(1), unit=observed.unit,
                      epochs=epochs, patience=patience)
        t_perm[b] = result.t_obs
    p = float(np.mean(t_perm >= observed.t_obs))
    return C2stResult(accuracies=observed.accuracies, unit=observed.unit,
                      n_pairs=observed.n_pairs, high_variance=observed.high_variance,
                      t_perm=t_perm, p_value=p)
