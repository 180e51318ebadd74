"""
File formats: energy CSV, binary snapshots, PGM previews.

Snapshot layout (little-endian throughout)::

    offset  size  field
    0       4     magic b"NCHF"
    4       4     format version, uint32 (currently 1)
    8       4     N1, uint32
    12      4     N2, uint32
    16      8     X1, float64
    24      8     X2, float64
    32      8     t, float64
    40      8*N1*N2  field values, float64, row-major (index i of x fastest-varying last)
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from .energetics import EnergyRecord
from .spectral_grid import Grid

CSV_HEADER = ["t", "mass", "E", "E_mod", "linf", "min", "max", "dt"]
SNAPSHOT_MAGIC = b"NCHF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIddd")
PGM_RANGE = (-1.1, 1.1)


class FormatError(ValueError):
    """Malformed CSV row or snapshot file."""


def _fmt(v) -> str:
    return "" if v is None else format(float(v), ".17g")


def write_energy_csv(records: Iterable[EnergyRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])


def read_energy_csv(path) -> list[EnergyRecord]:
    out = []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header != CSV_HEADER:
            raise FormatError(f"{path}: line 1: expected header {','.join(CSV_HEADER)}")
        for lineno, row in enumerate(rows, start=2):
            if len(row) != len(CSV_HEADER):
                raise FormatError(f"{path}: line {lineno}: expected {len(CSV_HEADER)} columns, got {len(row)}")
            try:
                vals = {k: (None if (k == "E_mod" and v == "") else float(v)) for k, v in zip(CSV_HEADER, row)}
            except ValueError as e:
                raise FormatError(f"{path}: line {lineno}: {e}") from None
            out.append(EnergyRecord(**vals))
    return out


def write_snapshot(field: np.ndarray, t: float, path, grid: Grid) -> None:
    field = np.asarray(field, dtype="<f8")
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.N1, grid.N2, grid.X1, grid.X2, float(t)))
        fh.write(np.ascontiguousarray(field).tobytes(order="C"))


def read_snapshot(path) -> tuple[np.ndarray, float, Grid]:
    """Return ``(field, t, grid)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n1, n2, x1, x2, t = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    payload = data[_HEADER.size :]
    if len(payload) != 8 * n1 * n2:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {8 * n1 * n2}")
    field = np.frombuffer(payload, dtype="<f8").reshape(n1, n2).astype(np.float64)
    return field, t, Grid(x1, x2, n1, n2)


def gray_levels(field: np.ndarray) -> np.ndarray:
    """Map ``[-1.1, 1.1]`` linearly onto ``0..255`` (clamped, rounded half to even)."""
    lo, hi = PGM_RANGE
    g = np.rint(255.0 * (np.asarray(field) - lo) / (hi - lo))
    return np.clip(g, 0, 255).astype(np.uint8)


def write_pgm(field: np.ndarray, path) -> None:
    """Binary PGM preview: image columns follow x, rows follow y from top (largest y) down."""
    img = gray_levels(field).T[::-1]
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)
