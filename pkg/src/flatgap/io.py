"""Result serialization: field CSV, field binary blocks, sweep CSV and JSON summaries.

Every artifact carries ``schema_version``.  CSV floats are written with 17
significant digits; JSON floats use Python's shortest round-trip representation.

Field CSV::

    # flatgap-field schema_version=1 name=<name> chart=<flattened|physical>
    r,y_n,value            (or r,x_n,value for the physical chart)

Field binary (``.fgb``): ASCII header lines ``key: value`` terminated by ``end``,
then little-endian float64 arrays r (nr), t (nt) and values (nr * nt, row-major in r).

Sweep CSV::

    # flatgap-sweep schema_version=1
    epsilon,sup_grad,r_star,xn_star,osc_ratio,residual,wall_ms,ok
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .blowup_lab import SweepRecord
from .geometry import Profile
from .neck_solver import Field2D, Grid2D

__all__ = [
    "SCHEMA_VERSION",
    "SWEEP_COLUMNS",
    "fmt",
    "write_field_csv",
    "read_field_csv",
    "write_field_binary",
    "read_field_binary",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_json",
    "read_json",
]

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ("epsilon", "sup_grad", "r_star", "xn_star", "osc_ratio", "residual", "wall_ms", "ok")
_MAGIC = "flatgap-field-binary"


def fmt(x) -> str:
    """17 significant digits; non-finite values as nan/inf."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.17g}"


def write_field_csv(path, field: Field2D, chart: str = "flattened") -> Path:
    """One row per node: r, vertical coordinate (y_n or x_n), value."""
    if chart not in ("flattened", "physical"):
        raise ValueError("chart must be 'flattened' or 'physical'")
    path = Path(path)
    grid = field.grid
    R = np.broadcast_to(grid.r[:, None], grid.shape)
    Z = np.broadcast_to(grid.yn[None, :], grid.shape) if chart == "flattened" else grid.xn()
    with path.open("w", newline="") as fh:
        fh.write(f"# flatgap-field schema_version={SCHEMA_VERSION} name={field.name} chart={chart}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "y_n" if chart == "flattened" else "x_n", "value"])
        for a, b, c in zip(R.ravel(), Z.ravel(), field.values.ravel()):
            w.writerow([fmt(a), fmt(b), fmt(c)])
    return path


def read_field_csv(path):
    """Returns (header dict, columns dict of arrays)."""
    with Path(path).open() as fh:
        first = fh.readline()
        meta = dict(tok.split("=", 1) for tok in first[1:].split() if "=" in tok)
        rows = list(csv.reader(fh))
    names = rows[0]
    data = np.array(rows[1:], dtype=float)
    return meta, {n: data[:, i] for i, n in enumerate(names)}


def write_field_binary(path, field: Field2D) -> Path:
    path = Path(path)
    grid = field.grid
    p = grid.profile
    head = [
        _MAGIC,
        f"schema_version: {SCHEMA_VERSION}",
        f"name: {field.name}",
        f"nr: {grid.shape[0]}",
        f"nt: {grid.shape[1]}",
        f"epsilon: {grid.epsilon!r}",
        f"profile: {p.a!r} {p.r0!r} {p.gamma!r} {p.remainder!r}",
        f"breaks: {' '.join(repr(float(b)) for b in grid.breaks)}",
        "dtype: <f8",
        "end",
    ]
    with path.open("wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        for arr in (grid.r, grid.t, field.values):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return path


def read_field_binary(path) -> Field2D:
    raw = Path(path).read_bytes()
    meta = {}
    pos = 0
    first = True
    while True:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if first:
            if line != _MAGIC:
                raise ValueError("not a flatgap binary field")
            first = False
            continue
        if line == "end":
            break
        key, _, val = line.partition(": ")
        meta[key] = val
    nr, nt = int(meta["nr"]), int(meta["nt"])
    body = np.frombuffer(raw[pos:], dtype="<f8")
    r, t, vals = body[:nr], body[nr:nr + nt], body[nr + nt:].reshape(nr, nt)
    a, r0, gamma, rem = (float(v) for v in meta["profile"].split())
    breaks = tuple(float(b) for b in meta.get("breaks", "").split())
    grid = Grid2D(r.copy(), t.copy(), float(meta["epsilon"]), Profile(a, r0, gamma, rem), breaks)
    return Field2D(grid, vals.copy(), name=meta["name"])


def write_sweep_csv(path, records) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# flatgap-sweep schema_version={SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for rec in records:
            w.writerow([fmt(getattr(rec, c)) for c in SWEEP_COLUMNS[:-1]] + [int(rec.ok)])
    return path


def read_sweep_csv(path) -> list:
    with Path(path).open() as fh:
        fh.readline()
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        vals = {c: float(row[c]) for c in SWEEP_COLUMNS[:-1]}
        out.append(SweepRecord(
            epsilon=vals["epsilon"], sup_grad=vals["sup_grad"], r_star=vals["r_star"],
            xn_star=vals["xn_star"], osc_ratio=vals["osc_ratio"], residual=vals["residual"],
            unknowns=0, wall_ms=vals["wall_ms"], ok=bool(int(row["ok"])),
        ))
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict) -> Path:
    """Write ``payload`` with ``schema_version`` first; non-finite floats become null."""
    path = Path(path)
    doc = {"schema_version": SCHEMA_VERSION, **_clean(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())
