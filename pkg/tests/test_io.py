import io
import struct

import numpy as np
import pytest

from sparsedom.dyadic import Box, DyadicCube, GridFunction
from sparsedom.io import (grid_from_bytes, grid_to_bytes, read_grid_binary, read_grid_csv,
                          write_constants_csv, write_family_csv, write_grid_binary, write_grid_csv)
from sparsedom.sparse import SparseFamily, SparseEntry

from conftest import step_function


@pytest.mark.parametrize("n,m", [(1, 6), (2, 3)])
def test_binary_round_trip(tmp_path, n, m):
    f = step_function(Box((-1.5,) * n, 4.0), m, np.random.default_rng(n), pieces=4)
    path = tmp_path / "f.bin"
    write_grid_binary(f, path)
    g = read_grid_binary(path)
    assert g.box == f.box and g.m == f.m
    assert np.array_equal(g.values, f.values)


def test_binary_layout_is_little_endian():
    f = GridFunction(Box.interval(0.0, 2.0), 1, np.array([1.0, -2.0]))
    data = grid_to_bytes(f)
    assert data[:8] == b"SPDGRID1"
    assert struct.unpack("<II", data[8:16]) == (1, 1)
    assert struct.unpack("<4d", data[16:]) == (0.0, 2.0, 1.0, -2.0)


def test_binary_rejects_bad_payload():
    f = GridFunction(Box.interval(0.0, 2.0), 1, np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        grid_from_bytes(b"NOTAGRID" + grid_to_bytes(f)[8:])
    with pytest.raises(ValueError):
        grid_from_bytes(grid_to_bytes(f) + b"\0" * 8)


@pytest.mark.parametrize("n,m", [(1, 5), (2, 3)])
def test_csv_round_trip(tmp_path, n, m):
    f = step_function(Box((0.25,) * n, 1.0), m, np.random.default_rng(3), pieces=4)
    path = tmp_path / "f.csv"
    write_grid_csv(f, path)
    g = read_grid_csv(path)
    assert g.box == f.box and np.array_equal(g.values, f.values)
    assert path.read_text().splitlines()[0] == f"{n},{m},1.0," + ",".join(["0.25"] * n)


def test_family_csv():
    src = DyadicCube((1,), 2, (3,))
    entry = SparseEntry(src.cells(4).dilate(3), np.arange(4), src, 3)
    buf = io.StringIO()
    write_family_csv(SparseFamily(1, 4, [entry], 1 / 6), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "shift,level,index,dilation,witness_fraction"
    assert lines[1] == "1,2,3,3," + repr(4 / 12)


def test_constants_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_constants_csv([("power0.1", 2.0, 10, 5.25)], path)
    assert path.read_text() == "weight_id,p,depth,value\npower0.1,2.0,10,5.25\n"
