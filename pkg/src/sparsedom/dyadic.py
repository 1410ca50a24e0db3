"""Grid functions on a bounded box, dyadic cubes and the shifted dyadic family.

A :class:`GridFunction` stores one value per cell of a ``2**m``-per-axis
mesh over a square :class:`Box` (n = 1 or 2).  Everything outside the box
is treated as zero.

Cubes come in three flavours:

* :class:`DyadicCube` -- a cube ``(shift, level, index)`` of one of the
  ``3**n`` shifted dyadic grids.  Its continuum side is ``L * 2**-level``
  and grid ``t`` is offset by ``t * L / 3`` per axis.
* :class:`CellCube` -- the cell-lattice realisation of a cube (integer
  lower corner and side, in cells).  Shifted cubes are realised by the
  cells whose midpoints they contain, which for a ``2**m`` mesh is the
  offset ``round(t * 2**m / 3)``.
* :class:`RealCube` -- an arbitrary axis-parallel cube, used for covering
  queries.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import AlignmentError, CoverageError

__all__ = [
    "Box",
    "GridFunction",
    "DyadicCube",
    "CellCube",
    "RealCube",
    "ShiftedGridFamily",
    "LevelBlocks",
    "grid_offset",
    "all_shifts",
    "level_blocks",
    "as_cell_cube",
    "mean",
    "cz_decompose",
    "cubes_mask",
]


@dataclass(frozen=True)
class Box:
    """Square computational domain ``lower + [0, side)**n``."""

    lower: tuple[float, ...]
    side: float

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        if lower.ndim != 1 or lower.size not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if not self.side > 0:
            raise ValueError("box side must be positive")
        object.__setattr__(self, "lower", tuple(float(v) for v in lower))
        object.__setattr__(self, "side", float(self.side))

    @classmethod
    def interval(cls, a: float, b: float) -> "Box":
        return cls((a,), b - a)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(v + self.side for v in self.lower)

    @property
    def volume(self) -> float:
        return self.side ** self.n


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples, one per cell, on a ``2**m``-per-axis mesh of ``box``."""

    box: Box
    m: int
    values: np.ndarray

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("resolution exponent must be non-negative")
        vals = np.array(self.values, dtype=float)
        expected = (2 ** self.m,) * self.box.n
        if vals.shape != expected:
            raise ValueError(f"expected sample array of shape {expected}, got {vals.shape}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def N(self) -> int:
        """Cells per axis."""
        return 2 ** self.m

    @property
    def h(self) -> float:
        """Cell width."""
        return self.box.side / self.N

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    def midpoints(self, axis: int = 0) -> np.ndarray:
        return self.box.lower[axis] + (np.arange(self.N) + 0.5) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        axes = [self.midpoints(i) for i in range(self.n)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """Cell midpoints as an array of shape ``(N**n, n)`` in row-major order."""
        return np.stack([c.ravel() for c in self.mesh()], axis=-1)

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.box, self.m, values)

    def __abs__(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    # -- constructors ----------------------------------------------------

    @classmethod
    def zeros(cls, box: Box, m: int) -> "GridFunction":
        return cls(box, m, np.zeros((2 ** m,) * box.n))

    @classmethod
    def constant(cls, box: Box, m: int, c: float) -> "GridFunction":
        return cls(box, m, np.full((2 ** m,) * box.n, float(c)))

    @classmethod
    def from_callable(cls, box: Box, m: int, fn: Callable) -> "GridFunction":
        """Sample ``fn`` at cell midpoints.

        ``fn`` receives one coordinate array per axis (``ij`` meshgrid).
        """
        proto = cls.zeros(box, m)
        vals = np.broadcast_to(np.asarray(fn(*proto.mesh()), dtype=float), proto.values.shape)
        return cls(box, m, vals)

    @classmethod
    def from_antiderivative(cls, box: Box, m: int, F: Callable) -> "GridFunction":
        """Exact cell averages of a 1-D function from its antiderivative ``F``.

        Used for integrable singularities (power weights) where midpoint
        samples badly misrepresent the mass of the cells next to the
        singular point.
        """
        if box.n != 1:
            raise ValueError("antiderivative sampling is one-dimensional")
        N = 2 ** m
        h = box.side / N
        edges = box.lower[0] + np.arange(N + 1) * h
        Fe = np.asarray(F(edges), dtype=float)
        return cls(box, m, np.diff(Fe) / h)

    @classmethod
    def indicator(cls, box: Box, m: int, lower, upper) -> "GridFunction":
        """Indicator of the axis-parallel rectangle ``[lower, upper)`` (midpoint rule)."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))

        def chi(*xs):
            out = np.ones_like(xs[0], dtype=bool)
            for x, a, b in zip(xs, lower, upper):
                out &= (x >= a) & (x < b)
            return out.astype(float)

        return cls.from_callable(box, m, chi)


# ---------------------------------------------------------------------------
# cubes


def grid_offset(t: int, m: int) -> int:
    """Cell offset of shifted grid ``t`` on a ``2**m`` mesh: ``round(t * 2**m / 3)``."""
    return (t * 2 ** m + 1) // 3


def all_shifts(n: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(3), repeat=n))


@dataclass(frozen=True)
class CellCube:
    """Cube on the cell lattice: ``lower + [0, side)**n`` in cell units.

    The lower corner may lie outside ``[0, N)``; only the in-box cells carry
    mass but :attr:`volume` is the full cube volume (zero extension).
    """

    lower: tuple[int, ...]
    side: int

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> int:
        return self.side ** self.n

    @property
    def upper(self) -> tuple[int, ...]:
        return tuple(a + self.side for a in self.lower)

    def dilate(self, factor: int = 3) -> "CellCube":
        """Concentric cube with ``factor`` times the side (odd factors keep alignment)."""
        if factor % 2 != 1:
            raise ValueError("dilation factor must be odd to stay cell-aligned")
        grow = (factor - 1) // 2 * self.side
        return CellCube(tuple(a - grow for a in self.lower), self.side * factor)

    def clip_slices(self, N: int) -> tuple[slice, ...]:
        lo = [max(a, 0) for a in self.lower]
        hi = [min(a + self.side, N) for a in self.lower]
        if any(a >= b for a, b in zip(lo, hi)):
            raise AlignmentError(f"{self} does not meet the box")
        return tuple(slice(a, b) for a, b in zip(lo, hi))

    def inside(self, N: int) -> bool:
        return all(a >= 0 and a + self.side <= N for a in self.lower)

    def mask(self, N: int) -> np.ndarray:
        out = np.zeros((N,) * self.n, dtype=bool)
        out[self.clip_slices(N)] = True
        return out

    def extract(self, values: np.ndarray) -> np.ndarray:
        """Values on the full cube, zero outside the box."""
        N = values.shape[0]
        out = np.zeros((self.side,) * self.n)
        src = self.clip_slices(N)
        dst = tuple(slice(s.start - a, s.stop - a) for s, a in zip(src, self.lower))
        out[dst] = values[src]
        return out

    def contains(self, other: "CellCube") -> bool:
        return all(a <= b and b + other.side <= a + self.side
                   for a, b in zip(self.lower, other.lower))


@dataclass(frozen=True)
class DyadicCube:
    """Cube ``index`` at ``level`` of the dyadic grid with per-axis ``shift``."""

    shift: tuple[int, ...]
    level: int
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "shift", tuple(int(t) for t in self.shift))
        object.__setattr__(self, "index", tuple(int(j) for j in self.index))
        if len(self.shift) != len(self.index):
            raise ValueError("shift and index must have the same dimension")
        if any(t not in (0, 1, 2) for t in self.shift):
            raise ValueError("shifts are drawn from {0, 1, 2}")

    @classmethod
    def standard(cls, level: int, index) -> "DyadicCube":
        index = tuple(np.atleast_1d(index).tolist())
        return cls((0,) * len(index), level, index)

    @property
    def n(self) -> int:
        return len(self.index)

    def cells(self, m: int) -> CellCube:
        if not 0 <= self.level <= m:
            raise AlignmentError(f"level {self.level} is not resolvable on a 2**{m} mesh")
        c = 2 ** (m - self.level)
        return CellCube(tuple(grid_offset(t, m) + j * c for t, j in zip(self.shift, self.index)), c)

    def bounds(self, box: Box) -> tuple[np.ndarray, np.ndarray]:
        s = box.side * 2.0 ** -self.level
        lo = np.array([a + t * box.side / 3 + j * s
                       for a, t, j in zip(box.lower, self.shift, self.index)])
        return lo, lo + s

    def side(self, box: Box) -> float:
        return box.side * 2.0 ** -self.level

    def parent(self) -> "DyadicCube":
        return DyadicCube(self.shift, self.level - 1, tuple(j // 2 for j in self.index))

    def children(self) -> list["DyadicCube"]:
        return [DyadicCube(self.shift, self.level + 1, tuple(2 * j + d for j, d in zip(self.index, ds)))
                for ds in itertools.product((0, 1), repeat=self.n)]


@dataclass(frozen=True)
class RealCube:
    """Arbitrary half-open axis-parallel cube ``lower + [0, side)**n``."""

    lower: tuple[float, ...]
    side: float

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in np.atleast_1d(self.lower)))
        object.__setattr__(self, "side", float(self.side))


CubeLike = Union[DyadicCube, CellCube]


def as_cell_cube(cube: CubeLike, m: int) -> CellCube:
    if isinstance(cube, CellCube):
        return cube
    if isinstance(cube, DyadicCube):
        return cube.cells(m)
    raise TypeError(f"cannot realise {type(cube).__name__} on the cell lattice")


@dataclass(frozen=True)
class ShiftedGridFamily:
    """The ``3**n`` dyadic grids with per-axis offsets ``{0, 1/3, 2/3} * side``."""

    box: Box

    @property
    def shifts(self) -> list[tuple[int, ...]]:
        return all_shifts(self.box.n)

    def cube_containing(self, point, level: int, shift: Sequence[int]) -> DyadicCube:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        s = self.box.side * 2.0 ** -level
        idx = [math.floor((x - a - t * self.box.side / 3) / s)
               for x, a, t in zip(point, self.box.lower, shift)]
        return DyadicCube(tuple(shift), level, tuple(idx))

    def covering_cube(self, Q: RealCube) -> DyadicCube:
        """Smallest family cube containing ``Q``; its side is at most ``6 * Q.side``."""
        L = self.box.side
        tol = 1e-12 * L
        lo = np.array(Q.lower)
        hi = lo + Q.side
        if len(lo) != self.box.n:
            raise ValueError("cube dimension does not match the box")
        if not Q.side > 0:
            raise ValueError("cube side must be positive")
        if np.any(lo < np.array(self.box.lower) - tol) or np.any(hi > np.array(self.box.upper) + tol):
            raise CoverageError("cube is not inside the box")
        if Q.side > L / 6 * (1 + 1e-12):
            raise CoverageError(f"cube side {Q.side} exceeds box side / 6 = {L / 6}")
        k = math.floor(math.log2(L / Q.side) + 1e-12)
        while k >= 0:
            for t in self.shifts:
                cube = self.cube_containing(lo + tol, k, t)
                clo, chi = cube.bounds(self.box)
                if np.all(clo <= lo + tol) and np.all(hi <= chi + tol):
                    return cube
            k -= 1
        raise CoverageError("no covering cube found")  # pragma: no cover


# ---------------------------------------------------------------------------
# level views


def _axis_layout(N: int, offset: int, c: int) -> tuple[int, int, int, int]:
    pad_left = (-offset) % c
    total = pad_left + N
    pad_right = (-total) % c
    count = (total + pad_right) // c
    first = (-pad_left - offset) // c
    return pad_left, pad_right, count, first


@dataclass(frozen=True, eq=False)
class LevelBlocks:
    """All cubes of one level of one grid, as rows of cell values.

    ``blocks`` has shape ``counts + (c**n,)``; cubes straddling the box edge
    are zero padded.
    """

    blocks: np.ndarray
    c: int
    shift: tuple[int, ...]
    level: int
    pad_left: tuple[int, ...]
    first: tuple[int, ...]
    N: int

    @property
    def counts(self) -> tuple[int, ...]:
        return self.blocks.shape[:-1]

    @property
    def n(self) -> int:
        return len(self.shift)

    def means(self) -> np.ndarray:
        return self.blocks.mean(axis=-1)

    def inside(self) -> np.ndarray:
        """Mask of cubes lying entirely in the box."""
        masks = []
        for cnt, pl in zip(self.counts, self.pad_left):
            k = np.arange(cnt)
            masks.append((k * self.c - pl >= 0) & ((k + 1) * self.c - pl <= self.N))
        if self.n == 1:
            return masks[0]
        return masks[0][:, None] & masks[1][None, :]

    def spread(self, cube_values: np.ndarray) -> np.ndarray:
        """Broadcast per-cube values back onto the cells of the box."""
        out = np.asarray(cube_values)
        for axis, pl in enumerate(self.pad_left):
            out = np.repeat(out, self.c, axis=axis)
            out = np.take(out, np.arange(pl, pl + self.N), axis=axis)
        return out

    def cube(self, position: Sequence[int]) -> DyadicCube:
        return DyadicCube(self.shift, self.level, tuple(f + k for f, k in zip(self.first, position)))


def level_blocks(values: np.ndarray, shift: Sequence[int], level: int, m: int) -> LevelBlocks:
    values = np.asarray(values, dtype=float)
    n = values.ndim
    N = values.shape[0]
    if not 0 <= level <= m:
        raise AlignmentError(f"level {level} is not resolvable on a 2**{m} mesh")
    c = 2 ** (m - level)
    layouts = [_axis_layout(N, grid_offset(t, m), c) for t in shift]
    pads = [(pl, pr) for pl, pr, _, _ in layouts]
    padded = np.pad(values, pads) if any(p != (0, 0) for p in pads) else values
    counts = [cnt for _, _, cnt, _ in layouts]
    if n == 1:
        blocks = padded.reshape(counts[0], c)
    else:
        blocks = (padded.reshape(counts[0], c, counts[1], c)
                  .transpose(0, 2, 1, 3)
                  .reshape(counts[0], counts[1], c * c))
    return LevelBlocks(blocks, c, tuple(shift), level,
                       tuple(pl for pl, _, _, _ in layouts),
                       tuple(f for _, _, _, f in layouts), N)


# ---------------------------------------------------------------------------
# operations


def mean(f: GridFunction, cube: CubeLike) -> float:
    """Average of ``f`` over ``cube`` by exact cell summation (zero outside the box)."""
    cc = as_cell_cube(cube, f.m)
    if cc.n != f.n:
        raise AlignmentError("cube dimension does not match the grid function")
    return float(f.values[cc.clip_slices(f.N)].sum() / cc.volume)


def _block_means(block: np.ndarray, s: int) -> np.ndarray:
    c0 = block.shape[0]
    k = c0 // s
    if block.ndim == 1:
        return block.reshape(k, s).mean(axis=1)
    return block.reshape(k, s, k, s).mean(axis=(1, 3))


def _upsample(mask: np.ndarray) -> np.ndarray:
    for axis in range(mask.ndim):
        mask = np.repeat(mask, 2, axis=axis)
    return mask


def cz_decompose(f: GridFunction, Q0: DyadicCube, lam: float) -> list[DyadicCube]:
    """Maximal dyadic subcubes ``P`` of ``Q0`` with ``<f>_P > lam``.

    ``Q0`` itself is admissible.  The search bottoms out at single cells, so
    a cell whose value exceeds ``lam`` is returned as a one-cell cube.
    Output is ordered level-major, index-minor.
    """
    if not lam > 0:
        raise ValueError("level must be positive")
    if np.any(f.values < 0):
        raise ValueError("Calderon-Zygmund decomposition expects a non-negative function")
    cc = Q0.cells(f.m)
    block = cc.extract(f.values)
    depth = f.m - Q0.level
    covered = np.zeros((1,) * f.n, dtype=bool)
    out: list[DyadicCube] = []
    for r in range(depth + 1):
        if r:
            covered = _upsample(covered)
        sel = (_block_means(block, cc.side >> r) > lam) & ~covered
        for pos in np.argwhere(sel):
            out.append(DyadicCube(Q0.shift, Q0.level + r,
                                  tuple(j * 2 ** r + int(p) for j, p in zip(Q0.index, pos))))
        covered |= sel
        if covered.all():
            break
    return out


def cubes_mask(cubes: Iterable[CubeLike], m: int, n: int) -> np.ndarray:
    """Union of the in-box cells of ``cubes``."""
    N = 2 ** m
    out = np.zeros((N,) * n, dtype=bool)
    for q in cubes:
        out[as_cell_cube(q, m).clip_slices(N)] = True
    return out
