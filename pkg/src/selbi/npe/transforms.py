"""Bijective per-parameter maps between natural and unconstrained space.

Training happens in unconstrained (then standardized) coordinates;
densities reported in natural space pick up the usual change-of-
variables terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("identity", "log", "logit")


@dataclass(frozen=True)
class ParamTransform:
    kinds: tuple

    def __post_init__(self) -> None:
        if not self.kinds:
            raise ValueError("need at least one parameter")
        bad = [k for k in self.kinds if k not in KINDS]
        if bad:
            raise ValueError(f"unknown transform kinds: {bad}")
        object.__setattr__(self, "kinds", tuple(self.kinds))

    @property
    def n_params(self) -> int:
        return len(self.kinds)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.ndim == 1:
            theta = theta[None, :]
        if theta.ndim != 2 or theta.shape[1] != self.n_params:
            raise ValueError(f"expected (n, {self.n_params}) parameters, got {theta.shape}")
        return theta

    def forward(self, theta) -> np.ndarray:
        """Natural -> unconstrained; validates the declared domains."""
        theta = self._check(theta)
        out = np.empty_like(theta)
        for j, kind in enumerate(self.kinds):
            x = theta[:, j]
            if kind == "identity":
                out[:, j] = x
            elif kind == "log":
                if np.any(x <= 0):
                    raise ValueError(f"parameter {j} must be positive for log transform")
                out[:, j] = np.log(x)
            else:
                if np.any((x <= 0) | (x >= 1)):
                    raise ValueError(f"parameter {j} must lie in (0,1) for logit transform")
                out[:, j] = np.log(x) - np.log1p(-x)
        return out

    def inverse(self, u) -> np.ndarray:
        u = self._check(u)
        out = np.empty_like(u)
        for j, kind in enumerate(self.kinds):
            x = u[:, j]
            if kind == "identity":
                out[:, j] = x
            elif kind == "log":
                out[:, j] = np.exp(x)
            else:
                # numerically symmetric sigmoid
                out[:, j] = np.where(x >= 0, 1.0 / (1.0 + np.exp(-x)),
                                     np.exp(x) / (1.0 + np.exp(x)))
        return out

    def log_abs_det_forward(self, theta) -> np.ndarray:
        """Row-wise log|d forward / d theta|, for natural-space densities."""
        theta = self._check(theta)
        out = np.zeros(theta.shape[0])
        for j, kind in enumerate(self.kinds):
            x = theta[:, j]
            if kind == "log":
                out -= np.log(x)
            elif kind == "logit":
                out -= np.log(x) + np.log1p(-x)
        return out


def prevalence_transform() -> ParamTransform:
    """Single logit-transformed prevalence in (0, 1)."""
    return ParamTransform(kinds=("logit",))


def idm_transform() -> ParamTransform:
    """Scales and shapes on log scale, covariate effects unconstrained."""
    return ParamTransform(kinds=("log",) * 6 + ("identity",) * 6)


def household_transform() -> ParamTransform:
    """Multipliers and beta on log scale, delta unconstrained."""
    return ParamTransform(kinds=("log",) * 9 + ("identity", "log"))
