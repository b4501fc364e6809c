"""Per-application plumbing behind the experiment commands.

Each application adapter knows how to set up its fixed design context,
draw one joint (parameters, dataset) pair, write the dataset as the
module's own delimited format, and load it back into encoded rows plus
the condition vector the posterior network expects. Commands stay
application-agnostic by talking only to this interface.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..household import PARAM_NAMES as HOUSEHOLD_PARAM_NAMES
from ..household.config import HouseholdPrior, generate_rosters, get_variant
from ..household.encode import read_dataset, write_dataset
from ..illness_death import PARAM_NAMES as IDM_PARAM_NAMES
from ..illness_death.simulate import IdmDesign, build_cohorts, read_records, write_records
from ..npe.problems import (
    household_condition,
    household_pair,
    household_rows,
    idm_pair,
    idm_rows,
    make_household_model,
    make_idm_model,
    make_prevalence_model,
    prevalence_condition,
    prevalence_pair,
    prevalence_rows,
)
from ..prevalence.schema import read_cohorts, write_cohorts
from ..prevalence.simulate import PrevalenceDesign, build_frames
from .io import atomic_via, read_tsv, write_tsv

PREVALENCE_PARAM_NAMES = ("prevalence",)


@dataclass
class Pair:
    """One simulated joint draw plus its manifest bookkeeping."""

    domain: object
    theta: np.ndarray
    cond: np.ndarray | None
    fields: dict


class PrevalenceApp:
    name = "prevalence"
    param_names = PREVALENCE_PARAM_NAMES
    cond_columns = ("epoch",)
    file_suffix = ".csv"
    make_model = staticmethod(make_prevalence_model)

    def prepare(self, sim, rng):
        design = PrevalenceDesign(cohort_size=sim.cohort_size, pop_size=sim.pop_size,
                                  epochs=tuple(sim.epochs))
        return design, build_frames(design, rng)

    def groups(self, sim):
        return [(f"epoch{e}", {"epoch": e}) for e in sim.epochs]

    def draw_pair(self, ctx, fields, rng) -> Pair:
        design, frames = ctx
        epoch = fields["epoch"]
        ds = prevalence_pair(design, frames, epoch, rng)
        return Pair(domain=ds.cohort, theta=np.array([ds.rho_true]),
                    cond=prevalence_condition(epoch), fields={"epoch": epoch})

    def cycle_fields(self, sim, j) -> dict:
        return {"epoch": sim.epochs[j % len(sim.epochs)]}

    def encode(self, pair: Pair) -> np.ndarray:
        return prevalence_rows(pair.domain)

    def write_domain(self, path, pair: Pair) -> None:
        atomic_via(path, lambda p: write_cohorts(p, [pair.domain]))

    def load_rows(self, sims_dir: Path, row: dict):
        cohort = read_cohorts(sims_dir / row["file"])[0]
        return prevalence_rows(cohort), prevalence_condition(int(row["epoch"]))


class IdmApp:
    name = "idm"
    param_names = IDM_PARAM_NAMES
    cond_columns = ("epoch", "observation", "visits_file")
    file_suffix = ".csv"
    make_model = staticmethod(make_idm_model)

    def prepare(self, sim, rng):
        design = IdmDesign(cohort_size=sim.cohort_size, epochs=tuple(sim.epochs))
        return design, build_cohorts(design, rng)

    def groups(self, sim):
        return [(f"epoch{e}", {"epoch": e, "observation": sim.observation})
                for e in sim.epochs]

    def draw_pair(self, ctx, fields, rng) -> Pair:
        design, cohorts = ctx
        epoch = fields["epoch"]
        params, batch = idm_pair(design, cohorts[epoch], rng, fields["observation"])
        return Pair(domain=batch, theta=params.to_vector(), cond=None,
                    fields=dict(fields))

    def cycle_fields(self, sim, j) -> dict:
        return {"epoch": sim.epochs[j % len(sim.epochs)],
                "observation": sim.observation}

    def encode(self, pair: Pair) -> np.ndarray:
        return idm_rows(pair.domain)

    def write_domain(self, path, pair: Pair) -> None:
        path = Path(path)
        atomic_via(path, lambda p: write_records(p, pair.domain))
        # the record format deliberately omits the visit times, but the
        # row encoding observes them; a sidecar keeps the file pipeline
        # lossless for training
        visits = path.with_name(path.stem.replace("dataset", "visits") + path.suffix)
        batch = pair.domain
        write_tsv(visits, ("visit1", "visit2"),
                  zip(batch.visit1.tolist(), batch.visit2.tolist()))
        pair.fields["visits_file"] = visits.name

    def load_rows(self, sims_dir: Path, row: dict):
        batch = read_records(sims_dir / row["file"])
        header, rows = read_tsv(sims_dir / Path(row["file"]).parent / row["visits_file"])
        if header != ["visit1", "visit2"] or len(rows) != batch.n:
            raise DataError(f"{row['visits_file']}: visit sidecar does not match records")
        batch = dataclasses.replace(
            batch,
            visit1=np.array([float(r[0]) for r in rows]),
            visit2=np.array([float(r[1]) for r in rows]),
        )
        return idm_rows(batch), None


class HouseholdApp:
    name = "household"
    param_names = HOUSEHOLD_PARAM_NAMES
    cond_columns = ("scheme", "variant")
    file_suffix = ".csv"
    make_model = staticmethod(make_household_model)

    def prepare(self, sim, rng):
        rosters = generate_rosters(sim.n_rosters, rng)
        variant = get_variant(sim.variant)
        n_select = sim.n_select if sim.n_select else None
        return rosters, variant, HouseholdPrior(), n_select, sim

    def groups(self, sim):
        return [(s, {"scheme": s, "variant": sim.variant}) for s in sim.schemes]

    def draw_pair(self, ctx, fields, rng) -> Pair:
        rosters, variant, prior, n_select, sim = ctx
        params, study = household_pair(rosters, variant, fields["scheme"], rng,
                                       prior=prior, n_select=n_select,
                                       replicates=sim.replicates, horizon=sim.horizon)
        return Pair(domain=study, theta=params.to_vector(),
                    cond=household_condition(fields["scheme"], fields["variant"]),
                    fields=dict(fields))

    def cycle_fields(self, sim, j) -> dict:
        return {"scheme": sim.schemes[j % len(sim.schemes)], "variant": sim.variant}

    def encode(self, pair: Pair) -> np.ndarray:
        return household_rows(pair.domain)

    def write_domain(self, path, pair: Pair) -> None:
        atomic_via(path, lambda p: write_dataset(p, pair.domain))

    def load_rows(self, sims_dir: Path, row: dict):
        ds = read_dataset(sims_dir / row["file"])
        return household_rows(ds), household_condition(ds.scheme, ds.variant_name)


_APPS = {"prevalence": PrevalenceApp(), "idm": IdmApp(), "household": HouseholdApp()}


def get_app(name: str):
    return _APPS[name]
