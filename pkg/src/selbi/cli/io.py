"""Atomic delimited-text output shared by the experiment commands.

Every file is written to a temporary sibling and renamed into place, so
an interrupted command never leaves a half-written artifact. Floats are
written with repr, making reruns byte-comparable and rereads exact.
"""

from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path

import numpy as np

from ..errors import DataError


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def atomic_write(path, write_fn) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_via(path, write_fn) -> None:
    """Run a path-taking writer against a temp sibling, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    except BaseException:
        if tmp.exists():
            tmp.unlink()
        raise


def write_tsv(path, header, rows) -> None:
    def _write(fh):
        w = csv.writer(fh, delimiter="\t")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])

    atomic_write(path, _write)


def write_kv(path, pairs) -> None:
    """Two-column key/value table for scalar results."""
    write_tsv(path, ("key", "value"), pairs)


def read_tsv(path) -> tuple[list, list]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing table file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty table")
        rows = [r for r in reader if r]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i} has {len(r)} cells, header has {len(header)}")
    return header, rows


def read_columns(path, *names) -> list:
    """Rows as dicts restricted to the named columns, order preserved."""
    header, rows = read_tsv(path)
    missing = [n for n in names if n not in header]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
    idx = {n: header.index(n) for n in names}
    return [{n: r[idx[n]] for n in names} for r in rows]
