"""Serialisation of grid functions, sparse families and weight constants.

Binary grid-function layout (all little-endian)::

    8 bytes   magic b"SPDGRID1"
    uint32    n
    uint32    m
    float64   lower[n]
    float64   side
    float64   values[2**(m n)]   row-major (C order)

CSV grid-function layout: a header line ``n,m,side,lower_0[,lower_1]``
followed by one value per line in row-major order.

Sparse families serialise one cube per row with columns
``shift,level,index,dilation,witness_fraction``; shift and index vectors are
joined with ``;``.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .dyadic import Box, GridFunction
from .sparse import SparseFamily

__all__ = [
    "grid_to_bytes",
    "grid_from_bytes",
    "write_grid_binary",
    "read_grid_binary",
    "write_grid_csv",
    "read_grid_csv",
    "family_rows",
    "write_family_csv",
    "write_constants_csv",
]

MAGIC = b"SPDGRID1"
PathLike = Union[str, Path]


def grid_to_bytes(f: GridFunction) -> bytes:
    head = MAGIC + struct.pack("<II", f.n, f.m)
    head += struct.pack(f"<{f.n}d", *f.box.lower) + struct.pack("<d", f.box.side)
    return head + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def grid_from_bytes(data: bytes) -> GridFunction:
    if data[:8] != MAGIC:
        raise ValueError("not a grid-function file")
    n, m = struct.unpack_from("<II", data, 8)
    off = 16
    lower = struct.unpack_from(f"<{n}d", data, off)
    off += 8 * n
    (side,) = struct.unpack_from("<d", data, off)
    off += 8
    count = 2 ** (m * n)
    vals = np.frombuffer(data, dtype="<f8", count=count, offset=off)
    if off + 8 * count != len(data):
        raise ValueError("grid-function payload has the wrong length")
    return GridFunction(Box(lower, side), m, vals.reshape((2 ** m,) * n))


def write_grid_binary(f: GridFunction, path: PathLike) -> None:
    Path(path).write_bytes(grid_to_bytes(f))


def read_grid_binary(path: PathLike) -> GridFunction:
    return grid_from_bytes(Path(path).read_bytes())


def write_grid_csv(f: GridFunction, path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f.n, f.m, repr(f.box.side), *map(repr, f.box.lower)])
        for v in f.values.ravel():
            w.writerow([repr(float(v))])


def read_grid_csv(path: PathLike) -> GridFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    n, m = int(head[0]), int(head[1])
    side = float(head[2])
    lower = tuple(float(v) for v in head[3:3 + n])
    vals = np.array([float(r[0]) for r in rows[1:]])
    return GridFunction(Box(lower, side), m, vals.reshape((2 ** m,) * n))


def family_rows(S: SparseFamily) -> list[tuple]:
    out = []
    for e in S.entries:
        src = e.source
        shift = ";".join(map(str, src.shift)) if src else ""
        level = src.level if src else ""
        index = ";".join(map(str, src.index)) if src else ";".join(map(str, e.cube.lower))
        out.append((shift, level, index, e.dilation, e.witness.size / e.cube.volume))
    return out


def write_family_csv(S: SparseFamily, path_or_buffer) -> None:
    header = ("shift", "level", "index", "dilation", "witness_fraction")
    _write_rows(path_or_buffer, header, family_rows(S))


def write_constants_csv(rows: Iterable[Sequence], path_or_buffer) -> None:
    """Rows ``(weight_id, p, depth, value)``."""
    _write_rows(path_or_buffer, ("weight_id", "p", "depth", "value"), rows)


def _write_rows(target, header, rows) -> None:
    if isinstance(target, io.TextIOBase) or hasattr(target, "write"):
        w = csv.writer(target, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(target, "w", newline="") as fh:
        _write_rows(fh, header, rows)
