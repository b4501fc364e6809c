"""Weibull illness-death model: hazards and latent trajectories.

Three states (healthy 0, ill 1, dead 2) with cause-specific Weibull
hazards h_kl(t|c) = a_kl * kappa_kl * t^(kappa_kl - 1) * exp(beta_kl . c)
for the transitions 01 (illness onset), 02 (death while healthy) and
12 (death after illness). The covariate vector c is (sex, centered
age). Times are measured in days since study entry; the 12 transition
runs on the same clock (Markov convention), conditional on having
survived to onset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..randkit import RngStream, gamma_from_mean_cv

TRANSITIONS = ("01", "02", "12")

PARAM_NAMES = (
    "a01", "a02", "a12",
    "kappa01", "kappa02", "kappa12",
    "beta01_sex", "beta01_age", "beta02_sex", "beta02_age", "beta12_sex", "beta12_age",
)


@dataclass(frozen=True, eq=False)
class IdmParams:
    """The 12 model parameters: scale, shape and covariate effects."""

    a01: float
    a02: float
    a12: float
    kappa01: float
    kappa02: float
    kappa12: float
    beta01: np.ndarray
    beta02: np.ndarray
    beta12: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a01", "a02", "a12", "kappa01", "kappa02", "kappa12"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be strictly positive, got {v}")
        for name in ("beta01", "beta02", "beta12"):
            b = np.asarray(getattr(self, name), dtype=np.float64)
            if b.shape != (2,) or not np.all(np.isfinite(b)):
                raise ValueError(f"{name} must be two finite coefficients (sex, age)")
            object.__setattr__(self, name, b)

    def scale(self, kl: str) -> float:
        return getattr(self, f"a{kl}")

    def shape(self, kl: str) -> float:
        return getattr(self, f"kappa{kl}")

    def beta(self, kl: str) -> np.ndarray:
        return getattr(self, f"beta{kl}")

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                self.a01, self.a02, self.a12,
                self.kappa01, self.kappa02, self.kappa12,
                *self.beta01, *self.beta02, *self.beta12,
            ]
        )

    @classmethod
    def from_vector(cls, v) -> "IdmParams":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (12,):
            raise ValueError(f"parameter vector must have length 12, got {v.shape}")
        return cls(
            a01=float(v[0]), a02=float(v[1]), a12=float(v[2]),
            kappa01=float(v[3]), kappa02=float(v[4]), kappa12=float(v[5]),
            beta01=v[6:8], beta02=v[8:10], beta12=v[10:12],
        )


@dataclass(frozen=True)
class IdmSubject:
    sex: int
    age: float  # centered
    epoch_id: int = 1

    def __post_init__(self) -> None:
        if self.sex not in (0, 1):
            raise ValueError(f"sex must be 0 or 1, got {self.sex}")
        if not np.isfinite(self.age):
            raise ValueError("age must be finite")
        if not 1 <= self.epoch_id <= 4:
            raise ValueError(f"epoch_id must lie in 1..4, got {self.epoch_id}")

    @property
    def covariates(self) -> np.ndarray:
        return np.array([float(self.sex), float(self.age)])


@dataclass(frozen=True)
class IdmPrior:
    """Independent priors on scales (Gamma), shapes (Gamma), effects (normal)."""

    scale_mean: float = 0.0002993
    scale_cv: float = 1.0
    shape_mean: float = 1.0
    shape_cv: float = 0.25
    beta_sd: float = 1.0

    def sample(self, rng: RngStream) -> IdmParams:
        gen = rng.generator
        sa = gamma_from_mean_cv(self.scale_mean, self.scale_cv)
        sk = gamma_from_mean_cv(self.shape_mean, self.shape_cv)
        a = gen.gamma(sa.shape, sa.scale, size=3)
        k = gen.gamma(sk.shape, sk.scale, size=3)
        b = gen.normal(0.0, self.beta_sd, size=6)
        return IdmParams(
            a01=a[0], a02=a[1], a12=a[2],
            kappa01=k[0], kappa02=k[1], kappa12=k[2],
            beta01=b[0:2], beta02=b[2:4], beta12=b[4:6],
        )


def _effective_scale(params: IdmParams, kl: str, covariates: np.ndarray) -> np.ndarray:
    # a_kl * exp(beta_kl . c), broadcast over subjects
    c = np.atleast_2d(np.asarray(covariates, dtype=np.float64))
    return params.scale(kl) * np.exp(c @ params.beta(kl))


def hazard(t, kl: str, params: IdmParams, subject: IdmSubject):
    """Cause-specific hazard h_kl(t | c) for one subject.

    Vectorized over ``t``; negative times are a domain error.
    """
    if kl not in TRANSITIONS:
        raise ValueError(f"unknown transition {kl!r}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("hazard requires t >= 0")
    a_eff = float(_effective_scale(params, kl, subject.covariates)[0])
    kappa = params.shape(kl)
    with np.errstate(divide="ignore"):
        out = a_eff * kappa * t ** (kappa - 1.0)
    return float(out) if out.ndim == 0 else out


def cumulative_hazard(t, kl: str, params: IdmParams, subject: IdmSubject):
    """A_kl(t | c) = a_kl * t^kappa_kl * exp(beta_kl . c)."""
    if kl not in TRANSITIONS:
        raise ValueError(f"unknown transition {kl!r}")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("cumulative hazard requires t >= 0")
    a_eff = float(_effective_scale(params, kl, subject.covariates)[0])
    out = a_eff * t ** params.shape(kl)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Trajectory:
    """Latent outcome: onset time (inf if never ill) and death time."""

    t_illness: float
    t_death: float

    @property
    def path(self) -> tuple[str, ...]:
        return ("0", "1", "2") if np.isfinite(self.t_illness) else ("0", "2")


def _invert_survival(u, a_eff, kappa):
    # S(t) = exp(-a_eff t^kappa); quantile at u via -log(1-u)
    e = -np.log1p(-u)
    return (e / a_eff) ** (1.0 / kappa)


def trajectory_from_uniforms(
    params: IdmParams, covariates: np.ndarray, u01, u02, u12
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic trajectory core shared by scalar and batch paths.

    Competing onset/death times come from inverse transform sampling;
    the post-onset death time is drawn conditional on exceeding the
    onset time, on the shared study clock:
    T12 = (T01^kappa12 + E/a12_eff)^(1/kappa12) with E standard
    exponential.

    Returns (t_illness, t_death) arrays; t_illness is inf when death
    comes first.
    """
    c = np.atleast_2d(np.asarray(covariates, dtype=np.float64))
    t01 = _invert_survival(u01, _effective_scale(params, "01", c), params.kappa01)
    t02 = _invert_survival(u02, _effective_scale(params, "02", c), params.kappa02)
    ill = t01 < t02
    a12 = _effective_scale(params, "12", c)
    e12 = -np.log1p(-np.asarray(u12, dtype=np.float64))
    t12 = (t01**params.kappa12 + e12 / a12) ** (1.0 / params.kappa12)
    t_ill = np.where(ill, t01, np.inf)
    t_death = np.where(ill, t12, t02)
    return t_ill, t_death


def simulate_trajectory(params: IdmParams, subject: IdmSubject, rng: RngStream) -> Trajectory:
    """Draw one latent illness-death trajectory."""
    u = rng.generator.random(3)
    t_ill, t_death = trajectory_from_uniforms(
        params, subject.covariates[None, :], u[0], u[1], u[2]
    )
    return Trajectory(t_illness=float(t_ill[0]), t_death=float(t_death[0]))
