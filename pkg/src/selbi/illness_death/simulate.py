"""Cohort generation, batch simulation and record files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from ..randkit import RngStream
from .model import IdmParams, IdmPrior, trajectory_from_uniforms
from .observe import VisitConfig, censor_with_visits, draw_visits


@dataclass
class IdmCohort:
    """Subject covariates for one epoch: sex, centered age, epoch id."""

    sex: np.ndarray
    age: np.ndarray
    epoch_id: int

    def __post_init__(self) -> None:
        self.sex = np.asarray(self.sex, dtype=np.int64)
        self.age = np.asarray(self.age, dtype=np.float64)
        if self.sex.shape != self.age.shape or self.sex.ndim != 1:
            raise ValueError("sex and age must be aligned vectors")
        if not np.all(np.isin(self.sex, (0, 1))):
            raise ValueError("sex must be binary")
        if not np.all(np.isfinite(self.age)):
            raise ValueError("age must be finite")
        if not 1 <= int(self.epoch_id) <= 4:
            raise ValueError(f"epoch_id must lie in 1..4, got {self.epoch_id}")
        self.epoch_id = int(self.epoch_id)

    @property
    def n(self) -> int:
        return self.sex.size

    @property
    def covariates(self) -> np.ndarray:
        return np.column_stack([self.sex.astype(np.float64), self.age])


def generate_cohort(
    n: int,
    epoch_id: int,
    rng: RngStream,
    sex_prob: float = 0.55,
    age_sd: float = 7.0,
) -> IdmCohort:
    """Synthetic stand-in for the per-epoch covariate file.

    Ages are drawn already centered (mean zero), since only centered
    age enters the linear predictors.
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    gen = rng.generator
    sex = (gen.random(n) < sex_prob).astype(np.int64)
    age = gen.normal(0.0, age_sd, size=n)
    return IdmCohort(sex=sex, age=age, epoch_id=epoch_id)


@dataclass
class IdmRecordBatch:
    """Columnar observed records for one simulated cohort."""

    illness_time: np.ndarray
    illness_ind: np.ndarray
    death_time: np.ndarray
    death_ind: np.ndarray
    visit1: np.ndarray
    visit2: np.ndarray
    sex: np.ndarray
    age: np.ndarray
    epoch_id: int

    @property
    def n(self) -> int:
        return self.illness_time.size


def simulate_idm_dataset(
    params: IdmParams,
    cohort: IdmCohort,
    cfg: VisitConfig,
    rng: RngStream,
    keep_latent: bool = False,
):
    """Simulate latent trajectories for a cohort and observe them.

    Substream 0 drives the trajectories, substream 1 the visit
    process, so observation noise can be varied independently of the
    disease process.
    """
    gen = rng.child(0).generator
    u = gen.random((3, cohort.n))
    t_ill, t_death = trajectory_from_uniforms(params, cohort.covariates, u[0], u[1], u[2])
    v1, v2, dropout = draw_visits(cfg, rng.child(1), cohort.n)
    it, ii, dt, di, w1, w2 = censor_with_visits(t_ill, t_death, v1, v2, dropout, cfg)
    batch = IdmRecordBatch(
        illness_time=it,
        illness_ind=ii,
        death_time=dt,
        death_ind=di,
        visit1=w1,
        visit2=w2,
        sex=cohort.sex,
        age=cohort.age,
        epoch_id=cohort.epoch_id,
    )
    if keep_latent:
        return batch, (t_ill, t_death, v1, v2, dropout)
    return batch


def simulate_full_data_dataset(
    params: IdmParams, cohort: IdmCohort, cfg: VisitConfig, rng: RngStream
) -> IdmRecordBatch:
    """Administrative censoring only: no visit masking, no dropout.

    Events are observed exactly when they occur within the epoch;
    otherwise they are censored at the epoch end. Used to train the
    comparison model that ignores the visit process.
    """
    gen = rng.child(0).generator
    u = gen.random((3, cohort.n))
    t_ill, t_death = trajectory_from_uniforms(params, cohort.covariates, u[0], u[1], u[2])
    # keep the visit substream aligned with the censored simulator
    v1, v2, _ = draw_visits(cfg, rng.child(1), cohort.n)
    L = cfg.epoch_length
    ii = (t_ill <= L).astype(np.int64)
    di = (t_death <= L).astype(np.int64)
    return IdmRecordBatch(
        illness_time=np.where(ii == 1, t_ill, L),
        illness_ind=ii,
        death_time=np.where(di == 1, t_death, L),
        death_ind=di,
        visit1=v1,
        visit2=v2,
        sex=cohort.sex,
        age=cohort.age,
        epoch_id=cohort.epoch_id,
    )


@dataclass
class IdmDesign:
    """Study layout: per-epoch cohorts and the visit process."""

    cohort_size: int = 2299
    epochs: tuple[int, ...] = (1, 2, 3, 4)
    visit_cfg: VisitConfig = field(default_factory=VisitConfig)
    prior: IdmPrior = field(default_factory=IdmPrior)
    sex_prob: float = 0.55
    age_sd: float = 7.0


def build_cohorts(design: IdmDesign, rng: RngStream) -> dict[int, IdmCohort]:
    """Fixed per-epoch covariates shared by all simulated datasets."""
    return {
        e: generate_cohort(design.cohort_size, e, rng.child(e), design.sex_prob, design.age_sd)
        for e in design.epochs
    }


RECORD_COLUMNS = ("illness_time", "illness_ind", "death_time", "death_ind", "sex", "age", "epoch")


def write_records(path, batch: IdmRecordBatch, metadata_path=None, standardization=None) -> None:
    """Write observed records as delimited text.

    Standardization constants, when given, go to a JSON sidecar so the
    exact training-time transforms can be reapplied later.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for i in range(batch.n):
            writer.writerow(
                [
                    repr(float(batch.illness_time[i])),
                    int(batch.illness_ind[i]),
                    repr(float(batch.death_time[i])),
                    int(batch.death_ind[i]),
                    int(batch.sex[i]),
                    repr(float(batch.age[i])),
                    batch.epoch_id,
                ]
            )
    if metadata_path is not None:
        with open(metadata_path, "w") as fh:
            json.dump({"standardization": standardization or {}}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_records(path) -> IdmRecordBatch:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != RECORD_COLUMNS:
                raise DataError(f"{path}: expected header {','.join(RECORD_COLUMNS)}")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read record file {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no records")
    try:
        it = np.array([float(r[0]) for r in rows])
        ii = np.array([int(r[1]) for r in rows], dtype=np.int64)
        dt = np.array([float(r[2]) for r in rows])
        di = np.array([int(r[3]) for r in rows], dtype=np.int64)
        sex = np.array([int(r[4]) for r in rows], dtype=np.int64)
        age = np.array([float(r[5]) for r in rows])
        epochs = {int(r[6]) for r in rows}
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed record row ({exc})") from None
    if len(epochs) != 1:
        raise DataError(f"{path}: expected a single epoch per file, got {sorted(epochs)}")
    return IdmRecordBatch(
        illness_time=it,
        illness_ind=ii,
        death_time=dt,
        death_ind=di,
        visit1=np.zeros(it.size),
        visit2=np.zeros(it.size),
        sex=sex,
        age=age,
        epoch_id=epochs.pop(),
    )
