"""File formats for density grids, event lists and analysis reports.

Grids travel either as long-format CSV (one row per grid node, delimited,
interoperable) or as a compact binary container; event lists are CSV with a
JSON sidecar carrying the provenance (seed, generator, true g, config hash).
"""

import json
import os
import struct

import numpy as np

from .errors import ConfigError, ContractError
from .sampling import EventSet

__all__ = [
    "load_density_binary",
    "load_events_csv",
    "save_density_binary",
    "save_density_csv",
    "save_events_csv",
    "save_report_json",
]

_MAGIC = b"GQSGRID1"


def _check_target(path, force):
    if os.path.exists(path) and not force:
        raise ConfigError(f"refusing to overwrite existing file {path} (use force)")


def save_density_csv(path, row_axis, col_axis, values, labels=("x", "y", "density"), force=False):
    """Long-format CSV: one `row_label,col_label,density` line per grid node."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(row_axis), len(col_axis)):
        raise ContractError("values shape does not match the axes")
    _check_target(path, force)
    with open(path, "w") as fh:
        fh.write(",".join(labels) + "\n")
        for i, r in enumerate(row_axis):
            for j, c in enumerate(col_axis):
                fh.write(f"{r:.12e},{c:.12e},{values[i, j]:.12e}\n")


def save_density_binary(path, row_axis, col_axis, values, force=False):
    """Compact container: magic, dims, the two axes, then row-major float64."""
    row_axis = np.asarray(row_axis, dtype="<f8")
    col_axis = np.asarray(col_axis, dtype="<f8")
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.shape != (len(row_axis), len(col_axis)):
        raise ContractError("values shape does not match the axes")
    _check_target(path, force)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<qq", len(row_axis), len(col_axis)))
        fh.write(row_axis.tobytes())
        fh.write(col_axis.tobytes())
        fh.write(values.tobytes())


def load_density_binary(path):
    """Inverse of save_density_binary; returns (row_axis, col_axis, values)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ContractError(f"{path} is not a density grid container")
        nr, nc = struct.unpack("<qq", fh.read(16))
        if nr < 1 or nc < 1:
            raise ContractError(f"corrupt grid container {path}: dims {nr} x {nc}")
        row_axis = np.frombuffer(fh.read(8 * nr), dtype="<f8")
        col_axis = np.frombuffer(fh.read(8 * nc), dtype="<f8")
        raw = fh.read(8 * nr * nc)
        if len(raw) != 8 * nr * nc:
            raise ContractError(f"truncated grid container {path}")
        values = np.frombuffer(raw, dtype="<f8").reshape(nr, nc)
    return row_axis.copy(), col_axis.copy(), values.copy()


def save_events_csv(path, events: EventSet, config_hash=None, force=False):
    """Events as `X_m,T_s` CSV plus a JSON metadata sidecar next to it."""
    _check_target(path, force)
    meta_path = path + ".meta.json"
    _check_target(meta_path, force)
    np.savetxt(
        path,
        events.events,
        delimiter=",",
        header="X_m,T_s",
        comments="",
        fmt="%.12e",
    )
    meta = {
        "n": events.n,
        "seed": events.seed,
        "rng": events.rng,
        "g_true": events.g_true,
        "config_hash": config_hash,
    }
    meta.update(events.meta)
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_events_csv(path):
    """Read an events CSV (and its sidecar when present) back into an EventSet."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape[1] != 2:
        raise ContractError(f"{path} must have exactly two columns X_m,T_s")
    meta_path = path + ".meta.json"
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    return EventSet(
        events=arr,
        g_true=float(meta.get("g_true", float("nan"))),
        seed=int(meta.get("seed", -1)),
        n=len(arr),
        rng=meta.get("rng", "unknown"),
        meta={k: v for k, v in meta.items() if k not in ("g_true", "seed", "rng", "n")},
    )


def save_report_json(path, report: dict, force=False):
    _check_target(path, force)

    def default(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")
