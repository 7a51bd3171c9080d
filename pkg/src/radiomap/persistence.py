"""CSV + JSON sidecar storage for maps, masks, completion results and metrics.

Matrices are written with 12 significant digits, one row per angle index.
Every CSV ``x.csv`` has a sidecar ``x.json`` carrying a ``kind`` tag and the
metadata needed to rebuild the object.
"""
from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import numpy as np

from .channel import GridSpec
from .exceptions import InvalidArgumentError
from .experiments import MetricsRecord
from .sampling import SampleMask

MATRIX_FMT = "%.12g"
MAP_KINDS = ("radio_map", "rbf_prior", "lpr_prior", "completion")


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_sidecar(path) -> dict:
    side = sidecar_path(path)
    if not side.exists():
        raise InvalidArgumentError(f"missing sidecar {side}")
    with open(side) as fh:
        return json.load(fh)


def write_matrix(path, values, kind: str, grid: GridSpec | None = None, **meta) -> None:
    """Write a dB matrix and its sidecar.

    ``kind`` is one of ``MAP_KINDS``; extra keyword arguments land in the
    sidecar verbatim and must be JSON serialisable.
    """
    if kind not in MAP_KINDS:
        raise InvalidArgumentError(f"unknown matrix kind {kind!r}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise InvalidArgumentError("matrix must be two-dimensional")
    if grid is not None and values.shape != grid.shape:
        raise InvalidArgumentError(f"matrix shape {values.shape} does not match grid {grid.shape}")
    np.savetxt(path, values, fmt=MATRIX_FMT, delimiter=",")
    header = {"kind": kind, "shape": list(values.shape), **meta}
    if grid is not None:
        header["grid"] = grid.to_dict()
    _write_json(sidecar_path(path), header)


def read_matrix(path, kind: str | tuple | None = None):
    """Return ``(values, header)``; ``kind`` restricts the accepted tags."""
    header = read_sidecar(path)
    if kind is not None:
        allowed = (kind,) if isinstance(kind, str) else tuple(kind)
        if header.get("kind") not in allowed:
            raise InvalidArgumentError(f"{path} holds kind {header.get('kind')!r}, expected {allowed}")
    values = np.loadtxt(path, delimiter=",", ndmin=2)
    if list(values.shape) != header.get("shape", list(values.shape)):
        raise InvalidArgumentError(f"{path} shape {values.shape} disagrees with its sidecar")
    return values, header


def grid_from_header(header: dict) -> GridSpec:
    if "grid" not in header:
        raise InvalidArgumentError("sidecar has no grid")
    try:
        return GridSpec(**header["grid"])
    except TypeError as exc:
        raise InvalidArgumentError(f"bad grid in sidecar: {exc}") from None


def write_mask(path, mask: SampleMask, values=None) -> None:
    """Write ``(i, j, value)`` rows; ``value`` is the measured dB level or empty."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "value"])
        for i, j in mask.entries:
            v = "" if values is None else MATRIX_FMT % values[i, j]
            w.writerow([int(i), int(j), v])
    _write_json(
        sidecar_path(path),
        {
            "kind": "mask",
            "shape": list(mask.shape),
            "rho": mask.target_ratio,
            "strategy": mask.strategy,
            "mu": mask.mu,
            "seed": mask.seed,
        },
    )


def read_mask(path):
    """Return ``(mask, values)``; ``values`` is a full matrix (NaN off-mask) or None."""
    header = read_sidecar(path)
    if header.get("kind") != "mask":
        raise InvalidArgumentError(f"{path} is not a mask file")
    shape = tuple(header["shape"])
    entries, vals = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            entries.append((int(row["i"]), int(row["j"])))
            vals.append(float(row["value"]) if row["value"] != "" else np.nan)
    mask = SampleMask.from_entries(
        shape, entries, header.get("rho"), strategy=header.get("strategy", "uniform"),
        mu=header.get("mu"), seed=header.get("seed"),
    )
    full = None
    if entries and not np.all(np.isnan(vals)):
        full = np.full(shape, np.nan)
        idx = np.asarray(entries)
        full[idx[:, 0], idx[:, 1]] = vals
    return mask, full


def write_diagnostics(path, diagnostics: dict) -> None:
    _write_json(path, diagnostics)


# ---------------------------------------------------------------- metrics

_FIELDS = [f.name for f in dataclasses.fields(MetricsRecord)]


def _encode(v, name=None):
    if v is None:
        return ""
    if name == "error":
        # JSON string literal: keeps control characters the csv module cannot write
        return json.dumps(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _decode(name, s):
    if s == "":
        return None
    if name == "error":
        return json.loads(s)
    if name in ("method", "strategy"):
        return s
    if name == "converged":
        return s == "true"
    if name in ("seed", "iterations"):
        return int(s)
    return float(s)


def write_records(path, records) -> None:
    """One CSV row per record; floats use ``repr`` and errors are JSON strings, so reading back is exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_FIELDS)
        for r in records:
            w.writerow([_encode(getattr(r, f), f) for f in _FIELDS])


def read_records(path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(rows[0]) != set(_FIELDS):
        raise InvalidArgumentError(f"{path} does not have the metrics columns")
    return [MetricsRecord(**{f: _decode(f, row[f]) for f in _FIELDS}) for row in rows]
