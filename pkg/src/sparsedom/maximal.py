"""Maximal operators on shifted dyadic grids.

Every supremum over cubes ranges over the cubes of the requested dyadic
grids, levels ``0..depth`` (default: down to single cells).  Cubes that
straddle the box edge are zero extended.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .dyadic import CellCube, GridFunction, all_shifts, grid_offset, level_blocks
from .errors import BudgetError
from .orlicz import luxemburg_rows

__all__ = [
    "SublinearOperator",
    "MatrixOperator",
    "cube_sup",
    "dyadic_maximal",
    "shifted_maximal",
    "hl_maximal",
    "m_delta",
    "sharp_maximal",
    "sharp_maximal_delta",
    "orlicz_maximal",
    "iterated_maximal",
    "grand_maximal",
    "DEFAULT_BUDGET",
]

DEFAULT_BUDGET = 2e9
"""Default cap on kernel evaluations (row x column pairs) for :func:`grand_maximal`."""


def _shifts(n: int, shifts) -> list[tuple[int, ...]]:
    if shifts is None:
        return all_shifts(n)
    if isinstance(shifts, tuple) and all(isinstance(t, int) for t in shifts):
        return [shifts]
    return [tuple(t) for t in shifts]


def cube_sup(values: np.ndarray, m: int, stat: Callable[[np.ndarray], np.ndarray],
             shifts=None, depth: Optional[int] = None) -> np.ndarray:
    """Per cell, the max of ``stat(cube cells)`` over all cubes containing it.

    ``stat`` maps an array of shape ``(k, c**n)`` to ``k`` numbers.
    """
    values = np.asarray(values, dtype=float)
    depth = m if depth is None else min(depth, m)
    out = np.full(values.shape, -np.inf)
    if shifts is None:
        shifts = [(0,) * values.ndim]
    for t in _shifts(values.ndim, shifts):
        for level in range(depth + 1):
            lb = level_blocks(values, t, level, m)
            flat = lb.blocks.reshape(-1, lb.blocks.shape[-1])
            np.maximum(out, lb.spread(stat(flat).reshape(lb.counts)), out=out)
    return out


def _mean_stat(rows):
    return rows.mean(axis=-1)


def dyadic_maximal(f: GridFunction, shift: Optional[Sequence[int]] = None,
                   depth: Optional[int] = None) -> GridFunction:
    """``M_D f(x) = sup_{Q ∋ x} <|f|>_Q`` over one dyadic grid (standard by default)."""
    shift = tuple(shift) if shift is not None else (0,) * f.n
    return f.with_values(cube_sup(np.abs(f.values), f.m, _mean_stat, [shift], depth))


def shifted_maximal(f: GridFunction, depth: Optional[int] = None) -> GridFunction:
    """Max of the dyadic maximal functions of all ``3**n`` shifted grids."""
    return f.with_values(cube_sup(np.abs(f.values), f.m, _mean_stat, all_shifts(f.n), depth))


def _hl_1d(a: np.ndarray, chunk: int = 256) -> np.ndarray:
    N = a.size
    S = np.concatenate([[0.0], np.cumsum(a)])
    b = np.arange(N + 1)
    out = np.zeros(N)
    for start in range(0, N, chunk):
        rows = np.arange(start, min(start + chunk, N))
        length = b[None, :] - rows[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            V = (S[None, :] - S[rows, None]) / length
        V[length <= 0] = -np.inf
        # R[a, i] = max over right endpoints b > i of the window mean
        R = np.maximum.accumulate(V[:, ::-1], axis=1)[:, ::-1][:, 1:]
        R[np.arange(N)[None, :] < rows[:, None]] = -np.inf
        np.maximum(out, R.max(axis=0), out=out)
    return out


def hl_maximal(f: GridFunction) -> GridFunction:
    """Uncentered Hardy-Littlewood maximal function.

    In 1-D this is exact at grid resolution (all windows with cell-edge
    endpoints).  In 2-D it is the shifted-dyadic surrogate.
    """
    if f.n == 1:
        return f.with_values(_hl_1d(np.abs(f.values)))
    return shifted_maximal(f)


def m_delta(f: GridFunction, delta: float, shift: Optional[Sequence[int]] = None) -> GridFunction:
    """``M_{D,delta} f = (M_D |f|^delta)^(1/delta)``."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    g = dyadic_maximal(f.with_values(np.abs(f.values) ** delta), shift)
    return f.with_values(g.values ** (1.0 / delta))


def _oscillation_stat(rows):
    med = np.median(rows, axis=-1, keepdims=True)
    return np.abs(rows - med).mean(axis=-1)


def sharp_maximal(f: GridFunction, shift: Optional[Sequence[int]] = None) -> GridFunction:
    """``sup_{Q ∋ x} inf_c <|f - c|>_Q``; the inner infimum is attained at the median."""
    shift = tuple(shift) if shift is not None else (0,) * f.n
    return f.with_values(cube_sup(f.values, f.m, _oscillation_stat, [shift]))


def sharp_maximal_delta(f: GridFunction, delta: float, shift: Optional[Sequence[int]] = None) -> GridFunction:
    """``[M^#_D(|f|^delta)]^(1/delta)``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    g = sharp_maximal(f.with_values(np.abs(f.values) ** delta), shift)
    return f.with_values(g.values ** (1.0 / delta))


def orlicz_maximal(f: GridFunction, beta: float, shifts=None, depth: Optional[int] = None) -> GridFunction:
    """``sup_{Q ∋ x} ||f||_{L(log L)^beta, Q}`` over the shifted grids."""
    stat = (lambda rows: luxemburg_rows(rows, beta))
    return f.with_values(cube_sup(np.abs(f.values), f.m, stat, _shifts(f.n, shifts), depth))


def iterated_maximal(f: GridFunction, shifts=None) -> GridFunction:
    """``max_t M_{D_t}(M_{D_t} f)``, the dyadic model of ``M^2``."""
    out = np.zeros(f.values.shape)
    for t in _shifts(f.n, shifts):
        once = dyadic_maximal(f, t)
        np.maximum(out, dyadic_maximal(once, t).values, out=out)
    return f.with_values(out)


# ---------------------------------------------------------------------------
# operator handles and the grand maximal function


class SublinearOperator:
    """Evaluator ``(values, S, rows) -> T(values * chi_S)`` restricted to ``rows``.

    ``values`` is a flat cell array of shape ``(cells,)`` or ``(cells, k)``
    (``k`` functions at once); ``support`` a flat boolean mask or ``None``;
    ``rows`` flat cell indices or ``None`` for all cells.  Sublinearity is
    assumed, not checked.
    """

    def __init__(self, apply: Callable, bounded_lq: bool = True, name: str = "T"):
        self._apply = apply
        self.bounded_lq = bounded_lq
        self.name = name

    def __call__(self, values, support=None, rows=None) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        vec = values.ndim == 1
        v2 = values[:, None] if vec else values
        if rows is None:
            rows = np.arange(v2.shape[0])
        out = self._apply(v2, support, np.asarray(rows))
        return out[:, 0] if vec else out

    def apply_to(self, f: GridFunction) -> GridFunction:
        return f.with_values(self(f.values.ravel()).reshape(f.values.shape))


class MatrixOperator(SublinearOperator):
    """Linear operator given by a dense ``cells x cells`` matrix."""

    def __init__(self, matrix: np.ndarray, name: str = "T"):
        self.matrix = np.asarray(matrix, dtype=float)
        super().__init__(self._dense_apply, True, name)

    def _dense_apply(self, values, support, rows):
        active = np.any(values != 0, axis=1)
        if support is not None:
            active &= np.asarray(support, dtype=bool)
        cols = np.flatnonzero(active)
        if cols.size == 0:
            return np.zeros((rows.size, values.shape[1]))
        return self.matrix[np.ix_(rows, cols)] @ values[cols]


def _cube_index(cells: np.ndarray, offset: int, c: int) -> np.ndarray:
    return (cells - offset) // c


def grand_maximal(T: SublinearOperator, f, depth: Optional[int] = None, rows=None,
                  shifts=None, budget: float = DEFAULT_BUDGET):
    """``M_T f(x) = sup_{Q ∋ x} max_{ξ ∈ Q} |T(f chi_{(3Q)^c})(ξ)|``.

    ``f`` is a :class:`GridFunction` or a sequence of them (each function is
    treated separately).  ``rows`` is an optional boolean cell mask on
    which the result is wanted (zero elsewhere).  Cubes range over the
    shifted grids, levels ``0..depth``.
    """
    single = isinstance(f, GridFunction)
    fs = [f] if single else list(f)
    g0 = fs[0]
    n, m, N = g0.n, g0.m, g0.N
    depth = m if depth is None else min(depth, m)
    values = np.stack([g.values.ravel() for g in fs], axis=1)
    shape = g0.values.shape
    want = np.ones(shape, dtype=bool) if rows is None else np.asarray(rows, dtype=bool).reshape(shape)
    grids = _shifts(n, shifts)
    coords = np.indices(shape).reshape(n, -1)
    want_flat = want.ravel()
    nnz = int(np.count_nonzero(np.any(values != 0, axis=1)))
    out = np.zeros_like(values)
    if nnz == 0 or not want_flat.any():
        return _pack(out, fs, single)

    plan = []
    cost = 0.0
    for t in grids:
        for level in range(depth + 1):
            c = 2 ** (m - level)
            offs = [grid_offset(ti, m) for ti in t]
            ids = np.stack([_cube_index(coords[a], offs[a], c) for a in range(n)])
            wanted_ids = np.unique(ids[:, want_flat], axis=1)
            for col in wanted_ids.T:
                cube = CellCube(tuple(int(o + j * c) for o, j in zip(offs, col)), c)
                cost += min(c ** n, N ** n) * nnz
                plan.append(cube)
    if cost > budget:
        raise BudgetError(f"grand maximal needs ~{cost:.3g} kernel evaluations (budget {budget:.3g})")

    for cube in plan:
        inside = cube.mask(N).ravel()
        ring = ~cube.dilate(3).mask(N).ravel()
        q_rows = np.flatnonzero(inside)
        vals = np.abs(T(values, support=ring, rows=q_rows)).max(axis=0)
        target = np.flatnonzero(inside & want_flat)
        out[target] = np.maximum(out[target], vals[None, :])
    return _pack(out, fs, single)


def _pack(out, fs, single):
    shape = fs[0].values.shape
    res = [g.with_values(out[:, i].reshape(shape)) for i, g in enumerate(fs)]
    return res[0] if single else res
