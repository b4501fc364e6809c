"""Checkpoint serialization: binary weights plus a text export.

Layout: 8-byte magic, uint32 format version, uint32 header length, a
JSON header (architecture, transform kinds, standardization constants,
parameter order), then each parameter array as raw float64
little-endian in the declared order.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .model import AmortizedPosterior
from .network import NpeArchitecture
from .train import TrainConfig
from .transforms import ParamTransform

MAGIC = b"NPECKPT\x00"
FORMAT_VERSION = 1


def save_checkpoint(model: AmortizedPosterior, path) -> None:
    if not hasattr(model, "params_"):
        raise ValueError("cannot checkpoint an unfitted model")
    arch = model.architecture_
    order = sorted(model.params_)
    header = {
        "format_version": FORMAT_VERSION,
        "architecture": {
            "row_dim": arch.row_dim,
            "n_params": arch.n_params,
            "summary_dim": arch.summary_dim,
            "cond_dim": arch.cond_dim,
            "encoder_width": arch.encoder_width,
            "trunk_width": arch.trunk_width,
            "m_components": arch.m_components,
        },
        "transform_kinds": list(model.transform.kinds),
        "row_mean": model.row_mean_.tolist(),
        "row_sd": model.row_sd_.tolist(),
        "u_mean": model.u_mean_.tolist(),
        "u_sd": model.u_sd_.tolist(),
        "param_order": order,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(FORMAT_VERSION).tobytes())
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        for name in order:
            fh.write(np.ascontiguousarray(model.params_[name], dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path) -> AmortizedPosterior:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 8 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a model checkpoint")
    off = len(MAGIC)
    version = int(np.frombuffer(raw, dtype="<u4", count=1, offset=off)[0])
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format version {version} unsupported (expected {FORMAT_VERSION})"
        )
    off += 4
    hlen = int(np.frombuffer(raw, dtype="<u4", count=1, offset=off)[0])
    off += 4
    if off + hlen > len(raw):
        raise CheckpointError(f"{path} is truncated inside the header")
    try:
        header = json.loads(raw[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header in {path}") from exc
    off += hlen

    try:
        arch = NpeArchitecture(**header["architecture"])
        kinds = tuple(header["transform_kinds"])
        order = header["param_order"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"malformed checkpoint header in {path}: {exc}") from exc

    shapes = arch.param_shapes()
    if sorted(order) != sorted(shapes):
        raise CheckpointError(f"checkpoint parameter set does not match architecture")
    params = {}
    for name in order:
        shape = shapes[name]
        count = int(np.prod(shape))
        if off + 8 * count > len(raw):
            raise CheckpointError(f"{path} is truncated inside array {name}")
        params[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape).copy()
        off += 8 * count
    if off != len(raw):
        raise CheckpointError(f"{path} has {len(raw) - off} trailing bytes")

    model = AmortizedPosterior(
        transform=ParamTransform(kinds=kinds),
        summary_dim=arch.summary_dim,
        cond_dim=arch.cond_dim,
        encoder_width=arch.encoder_width,
        trunk_width=arch.trunk_width,
        m_components=arch.m_components,
        train_config=TrainConfig(),
    )
    model.architecture_ = arch
    model.params_ = params
    model.row_mean_ = np.asarray(header["row_mean"], dtype=np.float64)
    model.row_sd_ = np.asarray(header["row_sd"], dtype=np.float64)
    model.u_mean_ = np.asarray(header["u_mean"], dtype=np.float64)
    model.u_sd_ = np.asarray(header["u_sd"], dtype=np.float64)
    model.n_features_in_ = arch.row_dim
    for name in ("row_mean_", "row_sd_"):
        if getattr(model, name).shape != (arch.row_dim,):
            raise CheckpointError(f"{name[:-1]} length does not match row_dim")
    for name in ("u_mean_", "u_sd_"):
        if getattr(model, name).shape != (arch.n_params,):
            raise CheckpointError(f"{name[:-1]} length does not match n_params")
    return model


def export_text(model: AmortizedPosterior, path) -> None:
    """Human-readable dump of the full checkpoint for debugging."""
    if not hasattr(model, "params_"):
        raise ValueError("cannot export an unfitted model")
    arch = model.architecture_
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w") as fh:
        fh.write(f"format_version: {FORMAT_VERSION}\n")
        for k in ("row_dim", "n_params", "summary_dim", "cond_dim",
                  "encoder_width", "trunk_width", "m_components"):
            fh.write(f"{k}: {getattr(arch, k)}\n")
        fh.write(f"transform_kinds: {','.join(model.transform.kinds)}\n")
        for name in ("row_mean_", "row_sd_", "u_mean_", "u_sd_"):
            vals = " ".join(repr(float(v)) for v in getattr(model, name))
            fh.write(f"{name[:-1]}: {vals}\n")
        for name in sorted(model.params_):
            arr = model.params_[name]
            fh.write(f"array {name} shape {'x'.join(map(str, arr.shape))}\n")
            for row in np.atleast_2d(arr):
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    os.replace(tmp, path)
