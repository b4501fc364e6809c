"""Visit-based observation of latent illness-death trajectories.

Illness status is only seen at study visits; death is registered
continuously up to the follow-up end. The rules, applied in order:

1. two visit times per subject, drawn around epoch-specific means
   (variance 100 before the mid-epoch boundary, 150 after), truncated
   to their half-epochs;
2. healthy subjects may drop out after the first visit (probability
   ``dropout_prob``), which ends follow-up for both processes there;
3. illness is detected at the first attended visit at or after onset,
   provided the subject is still alive at that visit; detection is
   recorded at the visit time;
4. death before any detecting visit masks the illness (last known
   status prevails);
5. everything is administratively censored at the epoch end; subjects
   latently disease-free and alive at the epoch end have their last
   visit reset to the epoch end (they continue into the next epoch).

Undetected illness in a subject who is alive but already ill at the
epoch end keeps the last real visit as its censoring time: within this
epoch nothing after that visit was confirmed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..randkit import RngStream
from .model import IdmSubject, Trajectory


@dataclass(frozen=True)
class VisitConfig:
    mean_visit1: float = 456.25
    mean_visit2: float = 1368.75
    var_visit1: float = 100.0
    var_visit2: float = 150.0
    dropout_prob: float = 0.05
    epoch_length: float = 1825.0

    def __post_init__(self) -> None:
        if not (self.var_visit1 > 0 and self.var_visit2 > 0):
            raise ValueError("visit variances must be positive")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError("dropout_prob must lie in [0, 1)")
        if not self.epoch_length > 0:
            raise ValueError("epoch_length must be positive")
        if not (0.0 <= self.mean_visit1 <= self.epoch_length and 0.0 <= self.mean_visit2 <= self.epoch_length):
            raise ValueError("visit means must lie within the epoch")

    @property
    def boundary(self) -> float:
        # first visit belongs to the first half of the epoch
        return self.epoch_length / 2.0


@dataclass(frozen=True)
class IdmRecord:
    """Observed subject: possibly censored event times and the visits."""

    illness_time: float
    illness_indicator: int
    death_time: float
    death_indicator: int
    visit1: float
    visit2: float


def _truncated_normal(gen, mean, sd, lo, hi, size):
    """Rejection-sampled truncated normal; exact and stream-stable."""
    out = np.empty(size, dtype=np.float64)
    pending = np.ones(size, dtype=bool)
    while pending.any():
        draw = gen.normal(mean, sd, size=int(pending.sum()))
        ok = (draw >= lo) & (draw <= hi)
        idx = np.flatnonzero(pending)[ok]
        out[idx] = draw[ok]
        pending[idx] = False
    return out


def draw_visits(cfg: VisitConfig, rng: RngStream, size: int):
    """Visit times and dropout indicators for ``size`` subjects."""
    gen = rng.generator
    v1 = _truncated_normal(gen, cfg.mean_visit1, np.sqrt(cfg.var_visit1), 0.0, cfg.boundary, size)
    v2 = _truncated_normal(gen, cfg.mean_visit2, np.sqrt(cfg.var_visit2), cfg.boundary, cfg.epoch_length, size)
    dropout = gen.random(size) < cfg.dropout_prob
    return v1, v2, dropout


def censor_with_visits(t_illness, t_death, v1, v2, dropout_draw, cfg: VisitConfig):
    """Pure censoring rules given the visit and dropout draws.

    Vectorized over subjects. Returns arrays
    (illness_time, illness_ind, death_time, death_ind, visit1, visit2).
    """
    t_ill = np.asarray(t_illness, dtype=np.float64)
    t_dead = np.asarray(t_death, dtype=np.float64)
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    dropout_draw = np.asarray(dropout_draw, dtype=bool)
    L = cfg.epoch_length

    detected1 = (t_ill <= v1) & (v1 < t_dead)
    # only subjects healthy and alive at visit 1 can drop out
    dropout = dropout_draw & ~detected1 & (t_dead > v1)
    follow_up = np.where(dropout, v1, L)

    detected2 = ~dropout & ~detected1 & (t_ill <= v2) & (v2 < t_dead)
    illness_ind = detected1 | detected2
    illness_detection = np.where(detected1, v1, v2)

    death_ind = t_dead <= follow_up
    death_time = np.where(death_ind, t_dead, follow_up)

    # disease-free survivors continue: last visit becomes the epoch end
    survivor_reset = ~dropout & ~illness_ind & (t_ill > L) & (t_dead > L)
    v2_eff = np.where(survivor_reset, L, v2)
    visit2 = np.where(dropout, v1, v2_eff)

    # censoring time for undetected illness: the last attended visit,
    # study entry if none was attended alive
    attended1 = v1 < t_dead
    attended2 = ~dropout & (v2_eff < t_dead)
    last_attended = np.where(attended2, v2_eff, np.where(attended1, v1, 0.0))
    illness_time = np.where(illness_ind, illness_detection, last_attended)

    return (
        illness_time,
        illness_ind.astype(np.int64),
        death_time,
        death_ind.astype(np.int64),
        v1,
        visit2,
    )


def apply_visit_censoring(
    trajectory: Trajectory, subject: IdmSubject, cfg: VisitConfig, rng: RngStream
) -> IdmRecord:
    """Observe one trajectory through the visit process."""
    v1, v2, dropout = draw_visits(cfg, rng, 1)
    it, ii, dt, di, w1, w2 = censor_with_visits(
        np.array([trajectory.t_illness]),
        np.array([trajectory.t_death]),
        v1,
        v2,
        dropout,
        cfg,
    )
    return IdmRecord(
        illness_time=float(it[0]),
        illness_indicator=int(ii[0]),
        death_time=float(dt[0]),
        death_indicator=int(di[0]),
        visit1=float(w1[0]),
        visit2=float(w2[0]),
    )
