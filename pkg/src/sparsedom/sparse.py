"""Sparse families: construction by stopping cubes, verification, sparse operators.

The construction follows the classical stopping-time argument on a root
cube ``Q0``.  At each node ``Q``:

1. ``Lam = ||F||_{L(log L)^beta, 3Q}`` with ``F = ||{f_k}||_{l^q}``;
2. ``E`` = cells of ``Q`` where ``F`` or ``||{M_T(f_k chi_{3Q})}||_{l^q}``
   exceeds ``C2 * Lam``;
3. while ``|E| > 2**-(n+2) |Q|`` the constant ``C2`` is doubled (it is a
   single running constant shared by all nodes);
4. the Calderon-Zygmund cubes ``P_j`` of ``chi_E`` at level ``2**-(n+1)``
   become the children, and ``Q`` is recorded with witness
   ``Q minus the union of the P_j``;
5. children are processed the same way; a single-cell child is recorded
   with itself as witness and not refined further.

The emitted family consists of the dilates ``3Q``; witnesses are the
pre-dilation sets, so the family is ``(1/2) 3**-n``-sparse.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dyadic import CellCube, DyadicCube, GridFunction, cz_decompose
from .errors import SparseConstructionError
from .maximal import SublinearOperator, grand_maximal
from .orlicz import luxemburg_rows
from .weights import lq_pointwise

__all__ = [
    "SparseEntry",
    "SparseFamily",
    "build_sparse_family",
    "verify_sparsity",
    "max_sparsity",
    "assign_witnesses",
    "sparse_operator",
    "domination_ratio",
]


@dataclass(frozen=True)
class SparseEntry:
    """Family cube with its witness set (flat cell indices, row-major)."""

    cube: CellCube
    witness: np.ndarray
    source: Optional[DyadicCube] = None
    dilation: int = 1

    def fraction(self) -> float:
        return self.witness.size / self.cube.volume


@dataclass
class SparseFamily:
    n: int
    m: int
    entries: list[SparseEntry]
    eta: float
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def cubes(self) -> list[CellCube]:
        return [e.cube for e in self.entries]

    @classmethod
    def from_cubes(cls, cubes: Sequence[CellCube], witnesses: Sequence, m: int, eta: float) -> "SparseFamily":
        """Family from explicit cubes and witnesses (boolean masks or flat index arrays)."""
        entries = []
        for c, w in zip(cubes, witnesses):
            w = np.asarray(w)
            if w.dtype == bool:
                w = np.flatnonzero(w.ravel())
            entries.append(SparseEntry(c, np.sort(w.astype(np.int64))))
        n = cubes[0].n if cubes else 1
        return cls(n, m, entries, eta)


def _flat_cells(cube: CellCube, N: int) -> np.ndarray:
    return np.flatnonzero(cube.mask(N).ravel())


def _lux_3q(F: np.ndarray, cube: CellCube, beta: float) -> float:
    return float(luxemburg_rows(cube.dilate(3).extract(F).ravel(), beta)[0])


def build_sparse_family(T: SublinearOperator, fs, q: float, beta: float, Q0: DyadicCube,
                        C2_init: Optional[float] = None, depth: Optional[int] = None,
                        max_doublings: int = 60) -> SparseFamily:
    """Stopping-cube construction of a sparse family dominating ``{T f_k}`` on ``Q0``.

    ``depth`` bounds the cube family of the grand maximal function used in
    the stopping condition.  Raises :class:`SparseConstructionError` when
    ``C2`` would have to be doubled more than ``max_doublings`` times.
    """
    fs = [fs] if isinstance(fs, GridFunction) else list(fs)
    g0 = fs[0]
    n, m, N = g0.n, g0.m, g0.N
    F = lq_pointwise(fs, q).values
    C2 = float(2 ** (n + 4) if C2_init is None else C2_init)
    C2_start = C2
    root = Q0.cells(m)
    if not root.inside(N):
        raise ValueError("the root cube must lie inside the box")
    entries: list[SparseEntry] = []
    nodes: list[dict] = []
    queue = deque([(Q0, 0)])
    stop_level = 2.0 ** -(n + 1)
    max_bad = 2.0 ** -(n + 2)

    while queue:
        Q, gen = queue.popleft()
        cc = Q.cells(m)
        lam = _lux_3q(F, cc, beta)
        if lam == 0.0:
            continue
        cells = _flat_cells(cc, N)
        if cc.side == 1:
            entries.append(SparseEntry(cc.dilate(3), cells, Q, 3))
            nodes.append({"cube": Q, "generation": gen, "children_fraction": 0.0, "lambda": lam})
            continue
        support = cc.dilate(3).mask(N)
        local = [g.with_values(np.where(support, g.values, 0.0)) for g in fs]
        inside = cc.mask(N)
        MT = lq_pointwise(grand_maximal(T, local, depth=depth, rows=inside), q).values.ravel()[cells]
        Fq = F.ravel()[cells]
        top = max(float(Fq.max()), float(MT.max()))
        while True:
            bad = (Fq > C2 * lam) | (MT > C2 * lam)
            if bad.sum() <= max_bad * cc.volume:
                break
            if not math.isfinite(top) or C2 >= C2_start * 2.0 ** max_doublings:
                raise SparseConstructionError(
                    f"stopping constant exceeded {C2:.3g} at {Q}; the operator looks unbounded")
            C2 *= 2.0
        chi = np.zeros(N ** n)
        chi[cells[bad]] = 1.0
        kids = cz_decompose(g0.with_values(chi.reshape(g0.values.shape)), Q, stop_level) if bad.any() else []
        covered = np.zeros(N ** n, dtype=bool)
        for P in kids:
            covered[_flat_cells(P.cells(m), N)] = True
        witness = cells[~covered[cells]]
        frac = float(covered[cells].sum()) / cc.volume
        entries.append(SparseEntry(cc.dilate(3), witness, Q, 3))
        nodes.append({"cube": Q, "generation": gen, "children_fraction": frac, "lambda": lam})
        queue.extend((P, gen + 1) for P in kids)

    order = sorted(range(len(entries)),
                   key=lambda i: (entries[i].source.level, entries[i].source.shift, entries[i].source.index))
    entries = [entries[i] for i in order]
    meta = {
        "C2": C2,
        "C2_init": C2_start,
        "nodes": nodes,
        "generations": 1 + max((d["generation"] for d in nodes), default=-1),
        "max_children_fraction": max((d["children_fraction"] for d in nodes), default=0.0),
        "grand_maximal_depth": m if depth is None else depth,
    }
    return SparseFamily(n, m, entries, 0.5 * 3.0 ** -n, meta)


def verify_sparsity(S: SparseFamily, eta: Optional[float] = None) -> tuple[bool, float]:
    """Check witnesses: contained in their cube, pairwise disjoint, ``|E_Q| >= eta |Q|``.

    Returns ``(ok, worst ratio |E_Q|/|Q|)`` (worst ratio is ``inf`` for an
    empty family).
    """
    eta = S.eta if eta is None else eta
    N = 2 ** S.m
    ok = True
    worst = math.inf
    seen = np.zeros(N ** S.n, dtype=np.int64)
    for e in S.entries:
        if e.witness.size:
            inside = e.cube.mask(N).ravel()
            if not inside[e.witness].all() or np.unique(e.witness).size != e.witness.size:
                ok = False
            seen[e.witness] += 1
        r = e.fraction()
        worst = min(worst, r)
        if r < eta * (1 - 1e-12):
            ok = False
    if np.any(seen > 1):
        ok = False
    return ok, worst


def _laminar_order(cubes: Sequence[CellCube]) -> list[int]:
    """Indices smallest-first; raises unless every pair is nested or disjoint."""
    for ci, cj in itertools.combinations(cubes, 2):
        overlap = all(a < b + cj.side and b < a + ci.side for a, b in zip(ci.lower, cj.lower))
        if overlap and not (ci.contains(cj) or cj.contains(ci)):
            raise ValueError("witness assignment is implemented for laminar (nested or disjoint) families")
    return sorted(range(len(cubes)), key=lambda i: cubes[i].side)


def assign_witnesses(cubes: Sequence[CellCube], eta: float, m: int) -> Optional[list[np.ndarray]]:
    """Greedy bottom-up witnesses with ``ceil(eta |Q|)`` cells each, or ``None`` if infeasible.

    For laminar families greedy is optimal: a cube can only use cells not
    taken by the cubes it contains, and any such free cell is as good as
    any other for its ancestors.
    """
    N = 2 ** m
    order = _laminar_order(cubes)
    taken = np.zeros(N ** (cubes[0].n if cubes else 1), dtype=bool)
    out: list[Optional[np.ndarray]] = [None] * len(cubes)
    for i in order:
        c = cubes[i]
        need = math.ceil(eta * c.volume - 1e-12)
        free = _flat_cells(c, N)
        free = free[~taken[free]]
        if free.size < need:
            return None
        pick = free[:need]
        taken[pick] = True
        out[i] = pick
    return out


def max_sparsity(cubes: Sequence[CellCube], m: int) -> float:
    """Largest ``eta`` for which a laminar family admits cell-set witnesses."""
    if not cubes:
        return 1.0
    candidates = sorted({k / c.volume for c in cubes for k in range(0, c.volume + 1)})
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if assign_witnesses(cubes, candidates[mid], m) is not None:
            lo = mid
        else:
            hi = mid - 1
    return candidates[lo]


def sparse_operator(S: SparseFamily, f: GridFunction, beta: float) -> GridFunction:
    """``sum_{Q in S} ||f||_{L(log L)^beta, Q} chi_Q`` (norms over full, zero-extended cubes)."""
    N = f.N
    vals = np.abs(f.values)
    out = np.zeros(f.values.shape)
    by_side: dict[int, list[CellCube]] = {}
    for c in S.cubes:
        by_side.setdefault(c.side, []).append(c)
    for side, cubes in sorted(by_side.items()):
        rows = np.stack([c.extract(vals).ravel() for c in cubes])
        norms = luxemburg_rows(rows, beta)
        for c, v in zip(cubes, norms):
            if v:
                out[c.clip_slices(N)] += v
    return f.with_values(out)


def domination_ratio(T: SublinearOperator, fs, S: SparseFamily, q: float, beta: float,
                     rows=None, rel_floor: float = 1e-14) -> float:
    """``max_x ||{T f_k(x)}||_{l^q} / max(A_S F(x), floor)`` with ``F = ||{f_k}||_{l^q}``.

    ``floor`` is ``rel_floor`` times the largest value of ``A_S F`` (machine
    tiny if that vanishes).  ``rows`` optionally restricts the cells.
    """
    fs = [fs] if isinstance(fs, GridFunction) else list(fs)
    F = lq_pointwise(fs, q)
    V = np.stack([g.values.ravel() for g in fs], axis=1)
    if not np.any(V):
        return 0.0
    TV = np.abs(T(V))
    lhs = TV.max(axis=1) if np.isinf(q) else (TV ** q).sum(axis=1) ** (1.0 / q)
    A = sparse_operator(S, F, beta).values.ravel()
    floor = max(rel_floor * float(A.max()), np.finfo(float).tiny)
    ratio = lhs / np.maximum(A, floor)
    if rows is not None:
        ratio = ratio[np.asarray(rows, dtype=bool).ravel()]
    return float(ratio.max())
