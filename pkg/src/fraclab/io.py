"""Serialization: field containers, CSV tables, canonical JSON reports.

Field containers are self-describing binary files (magic ``FRLB1``,
little-endian header, row-major doubles).  All writers are atomic: the
payload goes to a temporary file in the destination directory and is
renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

from .grids import HalfSpaceGrid, ScalarField, TraceField

MAGIC = b"FRLB1"
_HEADER = struct.Struct("<iii ddd B")  # n, nx, ny, L, Y, gamma, periodic


def _atomic_write_bytes(path: str, payload: bytes):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str):
    _atomic_write_bytes(path, text.encode())


def write_field(path: str, f: ScalarField):
    g = f.grid
    header = MAGIC + _HEADER.pack(
        g.n, g.nx, g.ny, g.L, g.Y, g.grading_gamma, 1 if g.periodic_x else 0
    )
    vals = np.ascontiguousarray(f.values, dtype="<f8")
    _atomic_write_bytes(path, header + vals.tobytes())


def read_field(path: str) -> ScalarField:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a field container (bad magic)")
    n, nx, ny, L, Y, gamma, per = _HEADER.unpack_from(blob, len(MAGIC))
    grid = HalfSpaceGrid(
        n=n, L=L, nx=nx, Y=Y, ny=ny, grading_gamma=gamma, periodic_x=bool(per)
    )
    body = blob[len(MAGIC) + _HEADER.size :]
    expected = int(np.prod(grid.shape)) * 8
    if len(body) != expected:
        raise ValueError(f"{path}: payload size {len(body)} != expected {expected}")
    vals = np.frombuffer(body, dtype="<f8").reshape(grid.shape).copy()
    return ScalarField(grid, vals)


def field_to_csv(path: str, f: ScalarField):
    """Plot-ready CSV: x index columns, y coordinate, value."""
    g = f.grid
    lines = []
    if g.n == 1:
        lines.append("i,x,y,value")
        for i in range(g.nx):
            for j in range(g.ny + 1):
                lines.append(f"{i},{g.x[i]:.17g},{g.y[j]:.17g},{f.values[i, j]:.17g}")
    else:
        lines.append("i1,i2,x1,x2,y,value")
        for i1 in range(g.nx):
            for i2 in range(g.nx):
                for j in range(g.ny + 1):
                    lines.append(
                        f"{i1},{i2},{g.x[i1]:.17g},{g.x[i2]:.17g},"
                        f"{g.y[j]:.17g},{f.values[i1, i2, j]:.17g}"
                    )
    atomic_write_text(path, "\n".join(lines) + "\n")


def trace_to_csv(path: str, t: TraceField):
    g = t.grid
    lines = []
    if g.n == 1:
        lines.append("i,x,value")
        for i in range(g.nx):
            lines.append(f"{i},{g.x[i]:.17g},{t.values[i]:.17g}")
    else:
        lines.append("i1,i2,x1,x2,value")
        for i1 in range(g.nx):
            for i2 in range(g.nx):
                lines.append(
                    f"{i1},{i2},{g.x[i1]:.17g},{g.x[i2]:.17g},{t.values[i1, i2]:.17g}"
                )
    atomic_write_text(path, "\n".join(lines) + "\n")


def trace_from_csv(path: str, grid: HalfSpaceGrid) -> TraceField:
    """Read a trace CSV back onto a grid (indices must cover the grid)."""
    vals = np.full(grid.x_shape, np.nan)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            if grid.n == 1:
                vals[int(parts[0])] = float(parts[header.index("value")])
            else:
                vals[int(parts[0]), int(parts[1])] = float(parts[header.index("value")])
    if np.any(np.isnan(vals)):
        raise ValueError(f"{path}: trace CSV does not cover the whole grid")
    return TraceField(grid, vals)


def rows_to_csv(path: str, header: list, rows: list):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- canonical JSON ---------------------------------------------------------


def _canonical(obj):
    """Make an object JSON-serializable with deterministic float text."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_canonical(obj), sort_keys=True, indent=2)


def report_hash(report: dict) -> str:
    """SHA-256 of the canonical report with volatile keys (timings, the
    hash itself) removed."""
    slim = {k: v for k, v in report.items() if k not in ("timings", "report_hash")}
    return hashlib.sha256(canonical_json(slim).encode()).hexdigest()


def write_report(path: str, report: dict) -> str:
    h = report_hash(report)
    report = dict(report)
    report["report_hash"] = h
    atomic_write_text(path, canonical_json(report) + "\n")
    return h
