"""Localized Luxemburg norms ``||f||_{L(log L)^beta, Q}`` and ``||h||_{exp L, Q}``.

The row solvers (:func:`luxemburg_rows`, :func:`exp_rows`) work on a 2-D
array whose rows are the cell values of many cubes at once; the maximal
operators call them one dyadic level at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dyadic import CubeLike, GridFunction, as_cell_cube
from .errors import NonConvergenceError

__all__ = [
    "OrliczParams",
    "HOLDER_CONSTANT",
    "young",
    "modular",
    "luxemburg_rows",
    "exp_rows",
    "luxemburg_norm",
    "exp_norm",
    "orlicz_holder_pair",
]

HOLDER_CONSTANT = 2.0
"""``<|f h|>_Q <= HOLDER_CONSTANT * ||f||_{L log L,Q} ||h||_{exp L,Q}``."""


@dataclass(frozen=True)
class OrliczParams:
    beta: float = 1.0
    tol: float = 1e-10
    max_expansions: int = 128

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


def young(t, beta: float, base: float = 1.0) -> np.ndarray:
    """``t * log(base + t)**beta``; ``base=1`` is the norm's own Young function."""
    t = np.asarray(t, dtype=float)
    if beta == 0:
        return t
    if base == 1.0:
        return t * np.log1p(t) ** beta
    return t * np.log(base + t) ** beta


def modular(values, lam: float, beta: float, base: float = 1.0, weight=None, cell_volume: float = 1.0) -> float:
    """``int (|v|/lam) log^beta(base + |v|/lam) [w]`` by cell summation."""
    phi = young(np.abs(values) / lam, beta, base)
    if weight is not None:
        phi = phi * weight
    return float(phi.sum() * cell_volume)


def _rows(values) -> np.ndarray:
    a = np.abs(np.asarray(values, dtype=float))
    if a.ndim == 1:
        a = a[None, :]
    if not np.all(np.isfinite(a)):
        raise NonConvergenceError("non-finite samples")
    return a


def luxemburg_rows(values, beta: float, tol: float = 1e-10, max_expansions: int = 128) -> np.ndarray:
    """Luxemburg norm of every row of ``values`` (row = the cells of one cube)."""
    a = _rows(values)
    avg = a.mean(axis=-1)
    if beta == 0:
        return avg
    out = np.zeros_like(avg)
    live = np.flatnonzero(avg > 0)
    if live.size == 0:
        return out
    a = a[live]

    def phi(lam, rows):
        return young(a[rows] / lam[:, None], beta).mean(axis=-1)

    lam0 = avg[live]
    val = phi(lam0, slice(None))
    lo = np.where(val > 1, lam0, np.nan)
    hi = np.where(val <= 1, lam0, np.nan)

    # geometric expansion until each row is bracketed
    need_hi = np.flatnonzero(np.isnan(hi))
    trial = lo[need_hi].copy()
    for _ in range(max_expansions):
        if need_hi.size == 0:
            break
        trial *= 2.0
        ok = phi(trial, need_hi) <= 1
        hi[need_hi[ok]] = trial[ok]
        lo[need_hi[~ok]] = trial[~ok]
        need_hi, trial = need_hi[~ok], trial[~ok]
    need_lo = np.flatnonzero(np.isnan(lo))
    trial = hi[need_lo].copy()
    for _ in range(max_expansions):
        if need_lo.size == 0:
            break
        trial *= 0.5
        ok = phi(trial, need_lo) > 1
        lo[need_lo[ok]] = trial[ok]
        hi[need_lo[~ok]] = trial[~ok]
        need_lo, trial = need_lo[~ok], trial[~ok]
    if need_hi.size or need_lo.size:
        raise NonConvergenceError("bracket expansion exhausted")

    active = np.flatnonzero(hi - lo > tol * hi)
    while active.size:
        mid = lo[active] * np.sqrt(hi[active] / lo[active])
        ok = phi(mid, active) <= 1
        hi[active[ok]] = mid[ok]
        lo[active[~ok]] = mid[~ok]
        active = active[hi[active] - lo[active] > tol * hi[active]]
    out[live] = hi
    return out


def exp_rows(values, tol: float = 1e-10) -> np.ndarray:
    """``inf{t > 0 : <exp(|h|/t)> <= 2}`` for every row of ``values``.

    Jensen brackets the root in ``[mean|h|, max|h|] / log 2``.
    """
    a = _rows(values)
    out = np.zeros(a.shape[0])
    live = np.flatnonzero(a.max(axis=-1) > 0)
    if live.size == 0:
        return out
    a = a[live]
    c = a.shape[-1]
    lo = a.mean(axis=-1) / np.log(2)
    hi = a.max(axis=-1) / np.log(2)
    log2c = np.log(2.0 * c)
    active = np.flatnonzero(hi - lo > tol * hi)
    while active.size:
        mid = 0.5 * (lo[active] + hi[active])
        ok = logsumexp(a[active] / mid[:, None], axis=-1) <= log2c
        hi[active[ok]] = mid[ok]
        lo[active[~ok]] = mid[~ok]
        active = active[hi[active] - lo[active] > tol * hi[active]]
    out[live] = hi
    return out


def _cube_values(f: GridFunction, Q: CubeLike) -> np.ndarray:
    return as_cell_cube(Q, f.m).extract(f.values).ravel()


def luxemburg_norm(f: GridFunction, Q: CubeLike, beta: float = 1.0,
                   tol: float = 1e-10, max_expansions: int = 128) -> float:
    """Least ``lam`` with ``<(|f|/lam) log^beta(1 + |f|/lam)>_Q <= 1``; 0 when ``f = 0`` on ``Q``."""
    OrliczParams(beta, tol, max_expansions)
    return float(luxemburg_rows(_cube_values(f, Q), beta, tol, max_expansions)[0])


def exp_norm(h: GridFunction, Q: CubeLike, tol: float = 1e-10) -> float:
    """Least ``t`` with ``<exp(|h|/t)>_Q <= 2``; 0 when ``h = 0`` on ``Q``."""
    return float(exp_rows(_cube_values(h, Q), tol)[0])


def orlicz_holder_pair(f: GridFunction, h: GridFunction, Q: CubeLike, beta: float = 1.0) -> tuple[float, float]:
    """``(<|f h|>_Q, ||f||_{L(log L)^beta,Q} * ||h||_{exp L,Q})``."""
    fv = _cube_values(f, Q)
    hv = _cube_values(h, Q)
    lhs = float(np.mean(np.abs(fv * hv)))
    rhs = float(luxemburg_rows(fv, beta)[0] * exp_rows(hv)[0])
    return lhs, rhs
