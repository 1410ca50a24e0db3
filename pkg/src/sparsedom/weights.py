"""Muckenhoupt-type weight constants and (vector-valued) weighted norms.

All suprema range over the cubes of the ``3**n`` shifted dyadic grids that
lie inside the box, levels ``0..depth``.  The reported constants are
therefore lower bounds for the suprema over all cubes.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

import numpy as np

from .dyadic import GridFunction, all_shifts, grid_offset, level_blocks

__all__ = [
    "conjugate",
    "check_weight",
    "power_weight",
    "dual_weight",
    "ap_constant",
    "ainf_constant",
    "a1_constant",
    "lq_pointwise",
    "weighted_lp_norm",
    "vector_lp_lq_norm",
    "weak_lp_norm",
    "vector_weak_lp_lq",
    "level_set_measure",
]

Functions = Union[GridFunction, Sequence[GridFunction]]


def conjugate(p: float) -> float:
    if not p > 1:
        raise ValueError("exponent must exceed 1")
    return p / (p - 1)


def check_weight(w: GridFunction) -> GridFunction:
    v = w.values
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("a weight needs strictly positive finite samples")
    return w


def power_weight(box, m: int, exponent: float) -> GridFunction:
    """``|x|**exponent`` as exact cell averages in 1-D (midpoint samples in 2-D).

    Requires ``exponent > -n`` so the weight is locally integrable.
    """
    if box.n == 1:
        if not exponent > -1:
            raise ValueError("|x|^a is locally integrable only for a > -1")
        a1 = exponent + 1.0
        return GridFunction.from_antiderivative(box, m, lambda x: np.sign(x) * np.abs(x) ** a1 / a1)
    if not exponent > -box.n:
        raise ValueError("|x|^a is locally integrable only for a > -n")
    return GridFunction.from_callable(box, m, lambda *xs: np.sqrt(sum(x * x for x in xs)) ** exponent)


def dual_weight(w: GridFunction, p: float) -> GridFunction:
    """``sigma = w**(-1/(p-1))`` pointwise."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    check_weight(w)
    return w.with_values(w.values ** (-1.0 / (p - 1.0)))


def _depth(f: GridFunction, depth: Optional[int]) -> int:
    if depth is None:
        return f.m
    if not 0 <= depth <= f.m:
        raise ValueError(f"depth must lie in [0, {f.m}]")
    return depth


def _inside_means(values: np.ndarray, t, level: int, m: int):
    lb = level_blocks(values, t, level, m)
    return lb.means()[lb.inside()]


def ap_constant(w: GridFunction, p: float, depth: Optional[int] = None,
                sigma: Optional[GridFunction] = None) -> float:
    """``sup_Q <w>_Q <sigma>_Q**(p-1)`` over in-box cubes of the shifted grids.

    ``sigma`` defaults to the pointwise dual weight.  Passing a separately
    discretised dual (e.g. exact cell averages of ``|x|**(-a/(p-1))``)
    avoids the Jensen bias of taking powers of cell averages next to a
    singularity.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    check_weight(w)
    sigma = dual_weight(w, p) if sigma is None else check_weight(sigma)
    depth = _depth(w, depth)
    best = -np.inf
    for t in all_shifts(w.n):
        for level in range(depth + 1):
            mw = _inside_means(w.values, t, level, w.m)
            if mw.size == 0:
                continue
            ms = _inside_means(sigma.values, t, level, w.m)
            best = max(best, float(np.max(mw * ms ** (p - 1.0))))
    return best


def a1_constant(w: GridFunction, depth: Optional[int] = None) -> float:
    """``sup_Q <w>_Q / min_Q w`` with the essential infimum taken at cell level."""
    check_weight(w)
    depth = _depth(w, depth)
    best = -np.inf
    for t in all_shifts(w.n):
        for level in range(depth + 1):
            lb = level_blocks(w.values, t, level, w.m)
            inside = lb.inside()
            if not inside.any():
                continue
            b = lb.blocks[inside]
            best = max(best, float(np.max(b.mean(axis=-1) / b.min(axis=-1))))
    return best


def _window_means(W: np.ndarray, r: Sequence[int], c: int) -> np.ndarray:
    """Means of the aligned ``c``-cubes (lower corners ``≡ r mod c``) spread to cells.

    ``W`` has shape ``(batch,) + (s,)*n``; returns the same shape.
    """
    n = W.ndim - 1
    s = W.shape[1]
    pads = [(0, 0)]
    counts = []
    for a in range(n):
        pl = (c - r[a] % c) % c
        pr = (-(pl + s)) % c
        pads.append((pl, pr))
        counts.append((pl + s + pr) // c)
    P = np.pad(W, pads)
    B = W.shape[0]
    if n == 1:
        means = P.reshape(B, counts[0], c).mean(axis=2)
        cells = np.repeat(means, c, axis=1)
        return cells[:, pads[1][0]:pads[1][0] + s]
    means = P.reshape(B, counts[0], c, counts[1], c).mean(axis=(2, 4))
    cells = np.repeat(np.repeat(means, c, axis=1), c, axis=2)
    return cells[:, pads[1][0]:pads[1][0] + s, pads[2][0]:pads[2][0] + s]


def ainf_constant(u: GridFunction, depth: Optional[int] = None) -> float:
    """Fujii-Wilson constant ``sup_Q u(Q)^{-1} int_Q M(u chi_Q)``.

    ``M`` is the shifted-dyadic maximal operator; for ``x ∈ Q`` only cubes
    no larger than ``Q`` can beat ``<u>_Q`` (attained by ``Q`` itself), so
    the inner supremum is computed on a window of three times the side of
    ``Q`` around each cube.
    """
    check_weight(u)
    depth = _depth(u, depth)
    m, n = u.m, u.n
    grids = all_shifts(n)
    best = -np.inf
    for t in grids:
        for level in range(depth + 1):
            lb = level_blocks(u.values, t, level, m)
            inside = lb.inside()
            if not inside.any():
                continue
            c = lb.c
            blocks = lb.blocks[inside].reshape((-1,) + (c,) * n)
            W = np.zeros((blocks.shape[0],) + (3 * c,) * n)
            center = (slice(None),) + (slice(c, 2 * c),) * n
            W[center] = blocks
            M = np.zeros_like(W[center])
            for t2 in grids:
                for sub in range(level, m + 1):
                    c2 = 2 ** (m - sub)
                    r = [(grid_offset(b, m) - grid_offset(a, m)) % c2 for a, b in zip(t, t2)]
                    np.maximum(M, _window_means(W, r, c2)[center], out=M)
            axes = tuple(range(1, n + 1))
            ratio = M.sum(axis=axes) / blocks.sum(axis=axes)
            best = max(best, float(ratio.max()))
    return best


# ---------------------------------------------------------------------------
# norms


def _stack(fs: Functions) -> tuple[np.ndarray, GridFunction]:
    if isinstance(fs, GridFunction):
        return fs.values[None], fs
    fs = list(fs)
    if not fs:
        raise ValueError("empty function sequence")
    g0 = fs[0]
    for g in fs[1:]:
        if g.box != g0.box or g.m != g0.m:
            raise ValueError("functions in a sequence must share box and resolution")
    return np.stack([g.values for g in fs]), g0


def lq_pointwise(fs: Functions, q: float) -> GridFunction:
    """Cellwise ``||{f_k(x)}||_{l^q}`` (``q = inf`` gives the max)."""
    V, g0 = _stack(fs)
    A = np.abs(V)
    if np.isinf(q):
        vals = A.max(axis=0)
    else:
        if not q >= 1:
            raise ValueError("q must be at least 1")
        vals = (A ** q).sum(axis=0) ** (1.0 / q)
    return g0.with_values(vals)


def _weight_values(w: Optional[GridFunction], like: GridFunction) -> np.ndarray:
    if w is None:
        return np.ones(like.values.shape)
    if w.box != like.box or w.m != like.m:
        raise ValueError("weight and function must share box and resolution")
    return w.values


def weighted_lp_norm(f: GridFunction, w: Optional[GridFunction], p: float) -> float:
    """``(int |f|^p w)^(1/p)`` by cell summation; ``w=None`` means Lebesgue measure."""
    wv = _weight_values(w, f)
    return float(((np.abs(f.values) ** p * wv).sum() * f.cell_volume) ** (1.0 / p))


def vector_lp_lq_norm(fs: Functions, w: Optional[GridFunction], p: float, q: float) -> float:
    return weighted_lp_norm(lq_pointwise(fs, q), w, p)


def level_set_measure(F: GridFunction, lam: float, w: Optional[GridFunction] = None) -> float:
    """``w({x : F(x) > lam})``."""
    wv = _weight_values(w, F)
    return float(wv[F.values > lam].sum() * F.cell_volume)


def weak_lp_norm(f: GridFunction, w: Optional[GridFunction], p: float) -> float:
    """``sup_lam lam * w({|f| > lam})**(1/p)`` over the attained values of ``|f|``.

    The distribution function is a step function, so the supremum is the
    left limit at an attained value ``v``: ``v**p * w({|f| >= v})``.
    """
    wv = _weight_values(w, f).ravel()
    a = np.abs(f.values).ravel()
    order = np.argsort(-a, kind="stable")
    a, wv = a[order], wv[order]
    mass = np.cumsum(wv) * f.cell_volume
    # w({|f| >= v}) is the cumulative mass at the last occurrence of v
    last = np.r_[a[1:] != a[:-1], True]
    vals = a[last] ** p * mass[last]
    vals = vals[a[last] > 0]
    return float(vals.max() ** (1.0 / p)) if vals.size else 0.0


def vector_weak_lp_lq(fs: Functions, w: Optional[GridFunction], p: float, q: float) -> float:
    return weak_lp_norm(lq_pointwise(fs, q), w, p)
