"""Fixed-width encoding of study datasets for the posterior network.

Each household becomes an (8, 15) block, one row per member, padded
with -1. Dates are study dates (already shifted); missing dates are -1.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import DataError
from .config import MAX_HOUSEHOLD, SCHEMES
from .sim import FOLLOW_UP_OFFSETS, HouseholdRecord, StudyDataset

N_FEATURES = 15
PAD_VALUE = -1.0

VARIANT_CODES = {"alpha": 0.0, "omicron": 1.0}

FIELD_NAMES = (
    "age_group",
    "uninfected",
    "symptomatic",
    "asymptomatic",
    "protected",
    "size",
    "variant",
    "scheme_random",
    "scheme_child",
    "scheme_adult",
    "onset_or_first_pos",
    "last_negative",
    "first_positive",
    "last_positive",
    "followup_end",
)


def encode_dataset(dataset: StudyDataset) -> np.ndarray:
    """(n_households, 8, 15) float array; padded member rows are all -1."""
    if dataset.variant_name not in VARIANT_CODES:
        raise ValueError(f"unknown variant {dataset.variant_name!r}")
    if dataset.scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {dataset.scheme!r}")
    scheme_onehot = np.array([float(dataset.scheme == s) for s in SCHEMES])
    variant_code = VARIANT_CODES[dataset.variant_name]
    out = np.full((dataset.n_households, MAX_HOUSEHOLD, N_FEATURES), PAD_VALUE)
    for j, rec in enumerate(dataset.records):
        m = rec.size
        pos = rec.positive.astype(bool)
        sym = rec.symptomatic.astype(bool)
        block = out[j, :m]
        block[:, 0] = rec.age_group
        block[:, 1] = (~pos).astype(np.float64)
        block[:, 2] = (pos & sym).astype(np.float64)
        block[:, 3] = (pos & ~sym).astype(np.float64)
        block[:, 4] = rec.protected
        block[:, 5] = float(m)
        block[:, 6] = variant_code
        block[:, 7:10] = scheme_onehot
        block[:, 10] = rec.onset_or_first_pos
        block[:, 11] = rec.last_negative
        block[:, 12] = rec.first_positive
        block[:, 13] = rec.last_positive
        block[:, 14] = rec.followup_end
    return out


def decode_dataset(encoded: np.ndarray) -> StudyDataset:
    """Rebuild a StudyDataset from its encoding.

    Fields that are not part of the encoding (ages in years, the
    inclusion case) are unavailable and left as placeholders.
    """
    arr = np.asarray(encoded, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != MAX_HOUSEHOLD or arr.shape[2] != N_FEATURES:
        raise ValueError(
            f"expected (n, {MAX_HOUSEHOLD}, {N_FEATURES}) encoding, got {arr.shape}"
        )
    records = []
    scheme = None
    variant = None
    for j in range(arr.shape[0]):
        block = arr[j]
        valid = block[:, 0] >= 0
        m = int(valid.sum())
        if m == 0 or valid[:m].sum() != m:
            raise DataError(f"household {j}: padding must trail the member rows")
        block = block[:m]
        row_scheme = SCHEMES[int(np.argmax(block[0, 7:10]))]
        code = float(block[0, 6])
        by_code = {v: k for k, v in VARIANT_CODES.items()}
        if code not in by_code:
            raise DataError(f"household {j}: unknown variant code {code}")
        row_variant = by_code[code]
        if scheme is None:
            scheme, variant = row_scheme, row_variant
        elif (row_scheme, row_variant) != (scheme, variant):
            raise DataError("mixed scheme or variant tags within one dataset")
        pos = block[:, 2] + block[:, 3] > 0.5
        followup_end = float(block[0, 14])
        records.append(
            HouseholdRecord(
                household_id=j,
                age_years=np.full(m, np.nan),
                age_group=block[:, 0].astype(np.int64),
                protected=block[:, 4].astype(np.int64),
                positive=pos.astype(np.int64),
                symptomatic=(block[:, 2] > 0.5).astype(np.int64),
                onset_or_first_pos=block[:, 10].copy(),
                last_negative=block[:, 11].copy(),
                first_positive=block[:, 12].copy(),
                last_positive=block[:, 13].copy(),
                inclusion_date=followup_end - FOLLOW_UP_OFFSETS[-1],
                followup_end=followup_end,
                inclusion_case=-1,
            )
        )
    if scheme is None:
        raise DataError("encoding contains no households")
    return StudyDataset(records=records, scheme=scheme, variant_name=variant)


def write_dataset(path, dataset: StudyDataset) -> None:
    """Row-per-person delimited text of the encoded fields."""
    encoded = encode_dataset(dataset)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("household",) + FIELD_NAMES)
        for j in range(encoded.shape[0]):
            m = dataset.records[j].size
            for i in range(m):
                writer.writerow([j] + [repr(float(v)) for v in encoded[j, i]])


def read_dataset(path) -> StudyDataset:
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    rows: dict[int, list] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["household", *FIELD_NAMES]:
            raise DataError(f"unexpected header in {path}")
        for line in reader:
            if len(line) != 1 + N_FEATURES:
                raise DataError(f"malformed row in {path}: {line!r}")
            try:
                hid = int(line[0])
                vals = [float(v) for v in line[1:]]
            except ValueError as exc:
                raise DataError(f"non-numeric value in {path}: {line!r}") from exc
            rows.setdefault(hid, []).append(vals)
    if not rows:
        raise DataError(f"no data rows in {path}")
    n = max(rows) + 1
    encoded = np.full((n, MAX_HOUSEHOLD, N_FEATURES), PAD_VALUE)
    for hid, members in rows.items():
        if len(members) > MAX_HOUSEHOLD:
            raise DataError(f"household {hid} has more than {MAX_HOUSEHOLD} members")
        encoded[hid, : len(members)] = np.asarray(members)
    return decode_dataset(encoded)
