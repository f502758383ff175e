"""Snapshot files: one JSON header line, then little-endian float64 payload.

The header lists every field with its shape, so the payload length is fully
determined by it.  Arrays round-trip bit-exactly.
"""

from __future__ import annotations

import json
from math import prod
from pathlib import Path

import numpy as np

from chromofluid.fluid_dynamics import CoupledState

SCHEMA_VERSION = 1


def state_fields(state: CoupledState) -> list[tuple[str, int, np.ndarray]]:
    f, g = state.fluid, state.gauge
    return [
        ("rho", 0, f.rho.data),
        ("s", 0, f.s.data),
        ("v", 1, f.v.data),
        ("Q", 0, f.Q.data),
        ("A", 1, g.A.data),
        ("E", 1, g.E.data),
    ]


def write_snapshot(path, state: CoupledState) -> None:
    grid = state.grid
    fields = state_fields(state)
    header = {
        "schema": SCHEMA_VERSION,
        "time": state.t,
        "grid": {"n": list(grid.n), "lengths": list(grid.lengths), "dealias": grid.dealias},
        "algebra": state.algebra.name,
        "byte_order": "little",
        "dtype": "float64",
        "fields": [
            {"name": name, "degree": deg, "lie_dim": int(arr.shape[1]), "shape": list(arr.shape)}
            for name, deg, arr in fields
        ],
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for _, _, arr in fields:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Return the header and a dict of arrays keyed by field name."""
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported snapshot schema {header.get('schema')!r}")
    if header.get("byte_order") != "little" or header.get("dtype") != "float64":
        raise ValueError("snapshot payload must be little-endian float64")
    payload = raw[nl + 1 :]
    expected = sum(prod(f["shape"]) for f in header["fields"]) * 8
    if len(payload) != expected:
        raise ValueError(f"snapshot payload has {len(payload)} bytes, header implies {expected}")
    out = {}
    off = 0
    for f in header["fields"]:
        nbytes = prod(f["shape"]) * 8
        out[f["name"]] = np.frombuffer(payload[off : off + nbytes], dtype="<f8").reshape(f["shape"]).copy()
        off += nbytes
    return header, out
