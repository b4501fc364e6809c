"""Delimited chain output and a plain-text diagnostics summary."""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

from .convergence import ChainDiagnostics


def _atomic(path: Path, write_fn) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_chains(chains, path, param_names=None) -> None:
    """One row per draw: chain index, draw index, log posterior, state.

    Values are written with repr so a reread reproduces them exactly.
    """
    path = Path(path)
    dim = chains[0].draws.shape[1]
    for c in chains:
        if c.draws.shape[1] != dim:
            raise ValueError("chains have inconsistent state dimensions")
    if param_names is None:
        param_names = [f"x{j}" for j in range(dim)]
    if len(param_names) != dim:
        raise ValueError(f"expected {dim} column names, got {len(param_names)}")

    def _write(fh):
        w = csv.writer(fh, delimiter="\t")
        w.writerow(["chain", "draw", "logpost", *param_names])
        for ci, c in enumerate(chains):
            for di in range(c.draws.shape[0]):
                w.writerow([ci, di, repr(float(c.logpost[di])),
                            *(repr(float(v)) for v in c.draws[di])])

    _atomic(path, _write)


def write_chain_summary(diag: ChainDiagnostics, path, chains=None) -> None:
    """Per-parameter R-hat/ESS table plus run-level notes."""
    path = Path(path)

    def _write(fh):
        fh.write(f"chains\t{diag.n_chains}\n")
        fh.write(f"draws_per_chain\t{diag.n_draws}\n")
        if chains is not None:
            rates = ", ".join(f"{c.acceptance_rate:.3f}" for c in chains)
            fh.write(f"acceptance_rates\t{rates}\n")
            for ci, c in enumerate(chains):
                for msg in c.warnings:
                    fh.write(f"warning\tchain {ci}: {msg}\n")
        fh.write("\nparam\tr_hat\tess\n")
        for j, name in enumerate(diag.param_names):
            fh.write(f"{name}\t{diag.r_hat[j]:.4f}\t{diag.ess[j]:.1f}\n")
        if diag.flags:
            fh.write("\n")
            for msg in diag.flags:
                fh.write(f"flag\t{msg}\n")

    _atomic(path, _write)
