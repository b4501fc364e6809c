"""Covariate schema, margin tables and cohort containers.

Covariates are categorical and stored as non-negative integer codes;
-1 marks a missing value. The dummy encoding used by the logistic
infection model leaves out one declared reference category per
dimension, so an all-reference individual is described by the
intercept alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

MISSING = -1


@dataclass(frozen=True)
class MarginTable:
    """Target population margins, one probability vector per dimension."""

    dims: tuple[str, ...]
    probs: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.dims) != len(self.probs):
            raise ValueError("dims and probs must align")
        clean = []
        for name, p in zip(self.dims, self.probs):
            p = np.asarray(p, dtype=np.float64)
            if p.ndim != 1 or p.size < 2:
                raise ValueError(f"margin {name} must be a vector with >= 2 categories")
            if np.any(p < 0):
                raise ValueError(f"margin {name} has negative entries")
            if abs(p.sum() - 1.0) > 1e-9:
                raise ValueError(f"margin {name} must sum to 1 within 1e-9, got {p.sum()!r}")
            clean.append(p)
        object.__setattr__(self, "probs", tuple(clean))

    @classmethod
    def from_dict(cls, d: dict) -> "MarginTable":
        return cls(dims=tuple(d.keys()), probs=tuple(np.asarray(v, dtype=np.float64) for v in d.values()))

    def prob(self, dim: str) -> np.ndarray:
        return self.probs[self.dims.index(dim)]

    def cardinality(self, dim: str) -> int:
        return self.prob(dim).size


@dataclass(frozen=True)
class CovariateSchema:
    """Category layout of the covariate matrix: names, sizes, references."""

    names: tuple[str, ...]
    cardinalities: tuple[int, ...]
    references: tuple[int, ...]

    def __post_init__(self) -> None:
        if not (len(self.names) == len(self.cardinalities) == len(self.references)):
            raise ValueError("schema fields must align")
        for name, k, r in zip(self.names, self.cardinalities, self.references):
            if k < 2:
                raise ValueError(f"dimension {name} needs >= 2 categories")
            if not (0 <= r < k):
                raise ValueError(f"reference {r} outside categories of {name}")

    @property
    def n_dims(self) -> int:
        return len(self.names)

    @property
    def n_dummies(self) -> int:
        return sum(k - 1 for k in self.cardinalities)

    @classmethod
    def from_margins(cls, margins: MarginTable, references: tuple[int, ...]) -> "CovariateSchema":
        return cls(
            names=margins.dims,
            cardinalities=tuple(p.size for p in margins.probs),
            references=references,
        )


def default_margins() -> MarginTable:
    """Synthetic default margins (real census margins are a config input)."""
    return MarginTable(
        dims=("sex", "age_group", "country", "hh_size"),
        probs=(
            np.array([0.49, 0.51]),
            np.array([0.17, 0.28, 0.22, 0.18, 0.15]),
            np.array([0.71, 0.29]),
            np.array([0.29, 0.33, 0.26, 0.12]),
        ),
    )


def default_schema() -> CovariateSchema:
    # references: male sex, second age band, domestic-born, single household
    return CovariateSchema.from_margins(default_margins(), references=(0, 1, 0, 0))


def dummy_encode(covariates: np.ndarray, schema: CovariateSchema) -> np.ndarray:
    """Dummy-code integer covariates, dropping the reference category.

    Parameters
    ----------
    covariates : ndarray of shape (n, n_dims)
        Complete integer codes; missing values are not allowed here,
        imputation happens upstream.
    schema : CovariateSchema

    Returns
    -------
    ndarray of shape (n, n_dummies), float64 in {0, 1}
    """
    cov = np.asarray(covariates)
    if cov.ndim != 2 or cov.shape[1] != schema.n_dims:
        raise ValueError(f"covariates must have shape (n, {schema.n_dims})")
    if np.any(cov == MISSING):
        raise ValueError("covariates contain missing codes; impute before encoding")
    cols = []
    for d, (k, ref) in enumerate(zip(schema.cardinalities, schema.references)):
        col = cov[:, d]
        if np.any((col < 0) | (col >= k)):
            raise ValueError(f"codes outside [0, {k}) in dimension {schema.names[d]}")
        for c in range(k):
            if c == ref:
                continue
            cols.append(col == c)
    return np.column_stack(cols).astype(np.float64)


@dataclass
class Cohort:
    """One study round: integer covariates, observed outcomes, epoch."""

    covariates: np.ndarray
    y: np.ndarray
    epoch: int
    sampling_weights: np.ndarray | None = field(default=None)

    def __post_init__(self) -> None:
        self.covariates = np.asarray(self.covariates, dtype=np.int64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.covariates.ndim != 2:
            raise ValueError("covariates must be 2-dimensional")
        if self.y.shape != (self.covariates.shape[0],):
            raise ValueError("y length must match covariates")
        if not np.all(np.isin(self.y, (-1, 0, 1))):
            raise ValueError("y must contain only -1, 0, 1")
        if not (1 <= int(self.epoch) <= 5):
            raise ValueError(f"epoch must lie in 1..5, got {self.epoch}")
        self.epoch = int(self.epoch)
        if self.sampling_weights is not None:
            w = np.asarray(self.sampling_weights, dtype=np.float64)
            if w.shape != (self.covariates.shape[0],) or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ValueError("sampling_weights must be positive, one per record")
            self.sampling_weights = w

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    def take(self, idx: np.ndarray) -> "Cohort":
        w = None if self.sampling_weights is None else self.sampling_weights[idx]
        return Cohort(self.covariates[idx], self.y[idx], self.epoch, w)


COHORT_COLUMNS = ("sex", "age_group", "country", "hh_size", "y", "epoch")


def write_cohorts(path, cohorts) -> None:
    """Write cohorts as delimited text, one row per individual."""
    if isinstance(cohorts, Cohort):
        cohorts = [cohorts]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COHORT_COLUMNS)
        for cohort in cohorts:
            if cohort.covariates.shape[1] != len(COHORT_COLUMNS) - 2:
                raise DataError(
                    f"cohort file format expects {len(COHORT_COLUMNS) - 2} covariates, "
                    f"got {cohort.covariates.shape[1]}"
                )
            for row, y in zip(cohort.covariates, cohort.y):
                writer.writerow([*map(int, row), int(y), cohort.epoch])


def read_cohorts(path) -> list[Cohort]:
    """Read a cohort file back, grouped by epoch in order of appearance."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != COHORT_COLUMNS:
                raise DataError(f"{path}: expected header {','.join(COHORT_COLUMNS)}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(COHORT_COLUMNS):
                    raise DataError(f"{path}:{lineno}: expected {len(COHORT_COLUMNS)} fields")
                try:
                    rows.append([int(v) for v in row])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: non-integer field ({exc})") from None
    except OSError as exc:
        raise DataError(f"cannot read cohort file {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no records")
    arr = np.asarray(rows, dtype=np.int64)
    cohorts = []
    seen = []
    for epoch in arr[:, -1]:
        if epoch not in seen:
            seen.append(int(epoch))
    for epoch in seen:
        block = arr[arr[:, -1] == epoch]
        try:
            cohorts.append(Cohort(block[:, :-2], block[:, -2], int(epoch)))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
    return cohorts
