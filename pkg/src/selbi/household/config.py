"""Variant constants, transmission parameters and roster generation.

Age enters twice with different bands: the transmission multipliers
distinguish infant (<6), child (6-11) and adult (>11), while study
selection distinguishes child (<18) from adult (>=18). Both views are
derived from age in years.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..randkit import GammaSpec, RngStream, gamma_from_mean_cv

MAX_HOUSEHOLD = 8

SCHEMES = ("random", "child", "adult")

# transmission age bands
INFANT, CHILD, ADULT = 0, 1, 2

PARAM_NAMES = (
    "mu_inf_sym_infant",
    "mu_inf_sym_child",
    "mu_inf_asym_infant",
    "mu_inf_asym_child",
    "mu_inf_asym_adult",
    "mu_sus_infant",
    "mu_sus_child",
    "mu_pro_transmission",
    "mu_pro_acquisition",
    "delta",
    "beta",
)


def age_band(age_years) -> np.ndarray:
    age = np.asarray(age_years, dtype=np.float64)
    return np.where(age < 6.0, INFANT, np.where(age < 12.0, CHILD, ADULT)).astype(np.int64)


@dataclass(frozen=True)
class VariantConfig:
    """Fixed variant-specific constants of the observation model."""

    name: str
    kernel: GammaSpec
    asym_prob: float
    incubation: GammaSpec
    trigger_delay_p: float
    background_test_daily_prob: float
    inclusion_delay_mean: float
    alpha_background: float
    target_n: int
    miss_prob_by_size: dict[int, float]
    sym_test_delay_p: float = 0.33
    positive_window: tuple[int, int] = (1, 15)

    def __post_init__(self) -> None:
        for pname in (
            "asym_prob",
            "trigger_delay_p",
            "background_test_daily_prob",
            "sym_test_delay_p",
        ):
            v = getattr(self, pname)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{pname} must lie in [0, 1], got {v}")
        if self.inclusion_delay_mean < 0:
            raise ValueError("inclusion_delay_mean must be nonnegative")
        if self.alpha_background < 0:
            raise ValueError("alpha_background must be nonnegative")
        if self.target_n <= 0:
            raise ValueError("target_n must be positive")
        for size, miss in self.miss_prob_by_size.items():
            if not (2 <= size <= MAX_HOUSEHOLD):
                raise ValueError(f"household size {size} outside supported range")
            if not 0.0 <= miss <= 1.0:
                raise ValueError(f"miss probability for size {size} must lie in [0, 1]")

    def miss_prob(self, size: int) -> float:
        if size not in self.miss_prob_by_size:
            raise ConfigError(
                f"variant {self.name} has no triggered-test miss probability for "
                f"household size {size}"
            )
        return self.miss_prob_by_size[size]


def alpha_variant() -> VariantConfig:
    return VariantConfig(
        name="alpha",
        kernel=GammaSpec.from_shape_rate(2.0, 0.44),
        asym_prob=0.4,
        incubation=gamma_from_mean_cv(4.42, 2.30 / 4.42),
        trigger_delay_p=0.48,
        background_test_daily_prob=1.0 / 21.0,
        inclusion_delay_mean=4.8,
        alpha_background=0.001,
        target_n=128,
        # size 8 is unsupported for this variant (no estimate)
        miss_prob_by_size={2: 0.00, 3: 0.10, 4: 0.07, 5: 0.14, 6: 0.10, 7: 0.71},
    )


def omicron_variant() -> VariantConfig:
    return VariantConfig(
        name="omicron",
        kernel=GammaSpec.from_shape_rate(3.351, 1.1098),
        asym_prob=0.3,
        incubation=gamma_from_mean_cv(3.09, 1.64 / 3.09),
        trigger_delay_p=0.46,
        background_test_daily_prob=1.0 / 14.0,
        inclusion_delay_mean=2.7,
        alpha_background=0.01,
        target_n=54,
        miss_prob_by_size={2: 0.00, 3: 0.40, 4: 0.24, 5: 0.17, 6: 0.17, 7: 0.14, 8: 0.13},
    )


def get_variant(name: str) -> VariantConfig:
    if name == "alpha":
        return alpha_variant()
    if name == "omicron":
        return omicron_variant()
    raise ConfigError(f"unknown variant {name!r}")


@dataclass(frozen=True, eq=False)
class HouseholdParams:
    """The 11 transmission parameters.

    mu_inf: infectivity multipliers (sym infant, sym child, asym
    infant, asym child, asym adult), relative to symptomatic adults.
    mu_sus: susceptibility multipliers (infant, child) relative to
    adults. mu_pro: protection effects (on transmission when the
    infector is protected, on acquisition when the susceptible is).
    """

    beta: float
    delta: float
    mu_inf: np.ndarray
    mu_sus: np.ndarray
    mu_pro: np.ndarray

    def __post_init__(self) -> None:
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be strictly positive, got {self.beta}")
        if not np.isfinite(self.delta):
            raise ValueError("delta must be finite")
        for name, size in (("mu_inf", 5), ("mu_sus", 2), ("mu_pro", 2)):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != (size,) or not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise ValueError(f"{name} must be {size} strictly positive multipliers")
            object.__setattr__(self, name, v)

    def size_weight(self, n) -> np.ndarray:
        """w(n) = (n/4)^(-delta)."""
        n = np.asarray(n, dtype=np.float64)
        return (n / 4.0) ** (-self.delta)

    def infectivity_table(self) -> np.ndarray:
        """(symptom status, age band) -> multiplier; sym adult is 1."""
        return np.array(
            [
                [self.mu_inf[0], self.mu_inf[1], 1.0],
                [self.mu_inf[2], self.mu_inf[3], self.mu_inf[4]],
            ]
        )

    def susceptibility_table(self) -> np.ndarray:
        return np.array([self.mu_sus[0], self.mu_sus[1], 1.0])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.mu_inf, self.mu_sus, self.mu_pro, [self.delta, self.beta]])

    @classmethod
    def from_vector(cls, v) -> "HouseholdParams":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (11,):
            raise ValueError(f"parameter vector must have length 11, got {v.shape}")
        return cls(
            beta=float(v[10]),
            delta=float(v[9]),
            mu_inf=v[0:5],
            mu_sus=v[5:7],
            mu_pro=v[7:9],
        )


@dataclass(frozen=True)
class HouseholdPrior:
    """beta ~ Gamma(2, 0.5), delta ~ N(0,1), multipliers ~ LogNormal(0, 0.7)."""

    beta_shape: float = 2.0
    beta_scale: float = 0.5
    delta_sd: float = 1.0
    mu_log_sd: float = 0.7

    def sample(self, rng: RngStream) -> HouseholdParams:
        gen = rng.generator
        return HouseholdParams(
            beta=float(gen.gamma(self.beta_shape, self.beta_scale)),
            delta=float(gen.normal(0.0, self.delta_sd)),
            mu_inf=gen.lognormal(0.0, self.mu_log_sd, size=5),
            mu_sus=gen.lognormal(0.0, self.mu_log_sd, size=2),
            mu_pro=gen.lognormal(0.0, self.mu_log_sd, size=2),
        )


@dataclass
class Roster:
    """One household's covariates: ages in years and protection flags."""

    age_years: np.ndarray
    protected: np.ndarray

    def __post_init__(self) -> None:
        self.age_years = np.asarray(self.age_years, dtype=np.float64)
        self.protected = np.asarray(self.protected, dtype=np.int64)
        if self.age_years.ndim != 1 or self.age_years.shape != self.protected.shape:
            raise ValueError("age_years and protected must be aligned vectors")
        if not 2 <= self.size <= MAX_HOUSEHOLD:
            raise ValueError(f"household size must lie in 2..{MAX_HOUSEHOLD}, got {self.size}")
        if np.any(self.age_years < 0) or not np.all(np.isfinite(self.age_years)):
            raise ValueError("ages must be nonnegative and finite")
        if not np.all(np.isin(self.protected, (0, 1))):
            raise ValueError("protected must be binary")

    @property
    def size(self) -> int:
        return self.age_years.size

    @property
    def age_group(self) -> np.ndarray:
        return age_band(self.age_years)


def generate_rosters(
    n: int,
    rng: RngStream,
    sizes: tuple[int, ...] = (2, 3, 4, 5, 6, 7),
    family_prob: float = 0.7,
    adult_protect_prob: float = 0.3,
    child_protect_prob: float = 0.05,
) -> list[Roster]:
    """Synthetic household rosters (the study ones are unavailable).

    Families get two adults plus children under 18; the rest are
    adult-only households. Sizes cycle through ``sizes`` so every size
    is represented.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    gen = rng.generator
    rosters = []
    for i in range(n):
        size = sizes[i % len(sizes)]
        if gen.random() < family_prob and size >= 3:
            n_adults = 2
            adults = gen.uniform(25.0, 50.0, size=n_adults)
            kids = gen.uniform(0.0, 18.0, size=size - n_adults)
            ages = np.concatenate([adults, kids])
        else:
            ages = gen.uniform(18.0, 75.0, size=size)
        protect_p = np.where(ages >= 18.0, adult_protect_prob, child_protect_prob)
        protected = (gen.random(size) < protect_p).astype(np.int64)
        rosters.append(Roster(age_years=ages, protected=protected))
    return rosters
