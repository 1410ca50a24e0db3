"""Recorded-constant experiments behind the command-line tool.

Each ``cmd_*`` function takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult`: table rows (one dict per row, fixed column
order), a summary dict with the headline number and its refinement delta
(depth ``m`` against ``m + 1``), and two-column plot series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dyadic import Box, DyadicCube, GridFunction
from .errors import ResolutionError
from .maximal import hl_maximal, orlicz_maximal
from .sharpness import log_grid, sharpness_norms
from .singular import TAOperator, amplitude_preset, bmo_seminorm, kernel_preset
from .sparse import build_sparse_family, domination_ratio, verify_sparsity
from .weaktype import lambda_grid, psi2, weak_type_check
from .weights import (a1_constant, ainf_constant, ap_constant, conjugate, lq_pointwise,
                      power_weight, vector_lp_lq_norm, weighted_lp_norm)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "DEFAULT_DEPTH",
    "loglog_slope",
    "random_sequence",
    "power_weight_pair",
    "cmd_sharpness",
    "cmd_domination",
    "cmd_weighted_bound",
    "cmd_endpoint",
    "cmd_buckley",
    "COMMANDS",
]

DEFAULT_DEPTH = {
    ("sharpness", 1): 14,
    ("buckley", 1): 12,
    ("domination", 1): 10,
    ("weighted-bound", 1): 10,
    ("endpoint", 1): 10,
}
"""Per-command default grid depth; every 2-D command defaults to 7."""

BOX_1D = Box.interval(-2.0, 2.0)
BOX_2D = Box((-2.0, -2.0), 4.0)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    p: float = 1.5
    q: float = 2.0
    beta: float = 1.0
    deltas: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    depth: Optional[int] = None
    dim: int = 1
    seed: int = 0
    seeds: int = 20
    functions: int = 4
    omega: str = "const1"
    amplitude: str = "xlogx"
    weight: str = "power"
    source: str = "indicator"
    drop_coarse: int = 0
    refine: bool = True

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if not (self.q >= 1 or math.isinf(self.q)):
            raise ValueError("q must be at least 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.dim not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if any(not 0 < d < 1 for d in self.deltas):
            raise ValueError("every delta must lie in (0, 1)")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.seeds < 1 or self.functions < 1:
            raise ValueError("seed and function counts must be positive")
        if self.drop_coarse < 0 or self.drop_coarse > max(len(self.deltas) - 2, 0):
            raise ValueError("cannot drop that many deltas and still fit a slope")

    @property
    def m(self) -> int:
        if self.depth is not None:
            return self.depth
        return DEFAULT_DEPTH.get((self.name, self.dim), 7)

    @property
    def box(self) -> Box:
        return BOX_1D if self.dim == 1 else BOX_2D


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[dict]
    summary: dict = field(default_factory=dict)
    plotdata: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)


def loglog_slope(x: Sequence[float], y: Sequence[float], drop_coarse: int = 0) -> float:
    """OLS slope of ``log y`` against ``log x``; ``drop_coarse`` removes the largest ``x`` values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(-x)
    keep = order[drop_coarse:]
    if keep.size < 2:
        raise ValueError("a slope needs at least two points")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def random_sequence(box: Box, m: int, k: int, rng: np.random.Generator, coarse: int = 5,
                    support: float = 0.5, density: float = 0.4) -> list[GridFunction]:
    """``k`` random step functions, constant on a ``2**coarse`` mesh, in the central ``support`` part of the box.

    Heavy-tailed amplitudes give the stopping construction something to
    do.  Because the functions live on a fixed coarse mesh they are the
    same function at every finer depth, which makes refinement studies
    meaningful.
    """
    if coarse > m:
        raise ResolutionError(f"depth {m} is coarser than the random step mesh 2**{coarse}")
    n = box.n
    C = 2 ** coarse
    idx = (np.arange(C) + 0.5) / C
    central = np.abs(idx - 0.5) < support / 2
    mask = central if n == 1 else central[:, None] & central[None, :]
    out = []
    for _ in range(k):
        shape = (C,) * n
        vals = rng.standard_normal(shape) * (rng.random(shape) < density) * (1.0 + rng.pareto(1.5, shape))
        vals = np.where(mask, vals, 0.0)
        for axis in range(n):
            vals = np.repeat(vals, 2 ** (m - coarse), axis=axis)
        out.append(GridFunction(box, m, vals))
    return out


def power_weight_pair(box: Box, m: int, p: float, delta: float) -> tuple[GridFunction, GridFunction]:
    """``w = |x|**((p-1)(1-delta))`` and ``sigma = |x|**(-(1-delta))``, both as cell averages."""
    a = (p - 1.0) * (1.0 - delta)
    return power_weight(box, m, a), power_weight(box, m, -a / (p - 1.0))


def _refinement(summary: dict, key: str, coarse: float, fine: float) -> None:
    summary[key] = coarse
    summary[f"{key}_refined"] = fine
    summary["refinement_delta"] = fine - coarse


# ---------------------------------------------------------------------------
# sharpness


def _sharpness_rows(cfg: ExperimentConfig, m: int) -> list[dict]:
    rows = []
    for d in cfg.deltas:
        U, _, du = log_grid(d, m)
        if (d * du) ** 2 / 24 > 1e-4:
            raise ResolutionError(
                f"depth {m} leaves the mass of f unresolved for delta={d}; use depth >= {_min_depth(d)}")
        w, s = power_weight_pair(BOX_1D, m, cfg.p, d)
        ap = ap_constant(w, cfg.p, sigma=s)
        res = sharpness_norms(d, cfg.p, m)
        rows.append({
            "delta": d,
            "ap_constant": ap,
            "f_norm_p": res.f_norm_p,
            "f_norm": res.f_norm,
            "ta_norm": res.ta_norm,
            "ratio": res.ratio,
            "lower_bound": 0.5 * d ** -2,
        })
    return rows


def _min_depth(delta: float) -> int:
    m = 1
    while True:
        U, _, du = log_grid(delta, m)
        if (delta * du) ** 2 / 24 <= 1e-4:
            return m
        m += 1


def cmd_sharpness(cfg: ExperimentConfig) -> ExperimentResult:
    """Ratio ``||T_A f|| / ||f||`` in ``L^p(w)`` along the power-law extremiser."""
    if cfg.dim != 1:
        raise ValueError("the sharpness experiment is one-dimensional")
    if any(d >= 0.5 for d in cfg.deltas):
        raise ValueError("the sharpness sweep needs every delta below 1/2")
    m = cfg.m
    rows = _sharpness_rows(cfg, m)
    deltas = [r["delta"] for r in rows]
    ratios = [r["ratio"] for r in rows]
    slope = loglog_slope(deltas, ratios, cfg.drop_coarse) if len(rows) > 1 else float("nan")
    ap_slope = loglog_slope(deltas, [r["ap_constant"] for r in rows], cfg.drop_coarse) if len(rows) > 1 else float("nan")
    regime = "sharp" if cfg.p <= 2 else "exploratory"
    for r in rows:
        r["fitted_slope"] = slope
        r["regime"] = regime
    summary = {"slope": slope, "ap_slope": ap_slope, "regime": regime, "depth": m}
    if cfg.refine:
        fine = _sharpness_rows(replace(cfg, deltas=(min(deltas),)), m + 1)[0]
        coarse = rows[int(np.argmin(deltas))]
        _refinement(summary, "ratio_smallest_delta", coarse["ratio"], fine["ratio"])
    cols = ["delta", "ap_constant", "f_norm_p", "f_norm", "ta_norm", "ratio", "lower_bound", "fitted_slope", "regime"]
    plot = {"ratio": (deltas, ratios), "ap_constant": (deltas, [r["ap_constant"] for r in rows])}
    return ExperimentResult("sharpness", cols, rows, summary, plot)


# ---------------------------------------------------------------------------
# domination


def _operator(cfg: ExperimentConfig, m: int, mode: str = "pv") -> TAOperator:
    return TAOperator(kernel_preset(cfg.omega, cfg.dim), amplitude_preset(cfg.amplitude, cfg.dim),
                      cfg.box, m, mode=mode)


def _domination_seed(cfg: ExperimentConfig, m: int, seed: int, T: TAOperator, zero: bool = False) -> dict:
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, cfg.functions + 1))
    fs = random_sequence(cfg.box, m, k, rng, coarse=min(5, m))
    if zero:
        fs = [f.with_values(np.zeros(f.values.shape)) for f in fs]
    root = DyadicCube((0,) * cfg.dim, 0, (0,) * cfg.dim)
    S = build_sparse_family(T, fs, cfg.q, cfg.beta, root)
    ok, worst = verify_sparsity(S)
    trivial = not any(np.any(f.values) for f in fs)
    return {
        "seed": seed,
        "functions": k,
        "beta": cfg.beta,
        "cubes": len(S),
        "sparse_ok": ok,
        "worst_witness_fraction": worst if len(S) else 1.0,
        "C2": S.metadata["C2"],
        "generations": S.metadata["generations"],
        "max_children_fraction": S.metadata["max_children_fraction"],
        "domination_ratio": domination_ratio(T, fs, S, cfg.q, cfg.beta),
        "trivial": trivial,
    }


def cmd_domination(cfg: ExperimentConfig, zero_input: bool = False) -> ExperimentResult:
    """Per-seed sparse construction, sparsity check and empirical domination constant."""
    m = cfg.m
    T = _operator(cfg, m)
    rows = [_domination_seed(cfg, m, cfg.seed + i, T, zero_input) for i in range(cfg.seeds)]
    worst = max(r["domination_ratio"] for r in rows)
    summary = {"max_domination_ratio": worst, "all_sparse": all(r["sparse_ok"] for r in rows), "depth": m}
    if cfg.refine:
        fine = _domination_seed(cfg, m + 1, cfg.seed, _operator(cfg, m + 1), zero_input)
        _refinement(summary, "domination_ratio_first_seed", rows[0]["domination_ratio"], fine["domination_ratio"])
    cols = list(rows[0].keys())
    plot = {"domination_ratio": ([r["seed"] for r in rows], [r["domination_ratio"] for r in rows])}
    return ExperimentResult("domination", cols, rows, summary, plot)


# ---------------------------------------------------------------------------
# weighted bound


def _weighted_row(cfg: ExperimentConfig, m: int, delta: Optional[float], fs, T, Ts, bmo: float) -> dict:
    p, q = cfg.p, cfg.q
    if delta is None:
        w = GridFunction.constant(cfg.box, m, 1.0)
        s = w
    elif cfg.dim == 1:
        w, s = power_weight_pair(cfg.box, m, p, delta)
    else:
        a = (p - 1.0) * (1.0 - delta)
        w = power_weight(cfg.box, m, a)
        s = w.with_values(w.values ** (-1.0 / (p - 1.0)))
    ap = ap_constant(w, p, sigma=s)
    aw = ainf_constant(w)
    asg = ainf_constant(s)
    V = np.stack([f.values.ravel() for f in fs], axis=1)
    shape = fs[0].values.shape
    Tf = [fs[0].with_values(c.reshape(shape)) for c in T(V).T]
    Tsf = [fs[0].with_values(c.reshape(shape)) for c in Ts(V).T]
    fn = vector_lp_lq_norm(fs, w, p, q)
    rhs = bmo * ap ** (1 / p) * (asg ** (1 / p) + aw ** (1 / conjugate(p))) * asg * fn
    lhs = vector_lp_lq_norm(Tf, w, p, q)
    lhs_s = vector_lp_lq_norm(Tsf, w, p, q)
    return {
        "delta": "unweighted" if delta is None else delta,
        "ap_constant": ap,
        "ainf_w": aw,
        "ainf_sigma": asg,
        "bmo_grad_a": bmo,
        "f_norm": fn,
        "ta_norm": lhs,
        "ta_star_norm": lhs_s,
        "rhs": rhs,
        "ratio": lhs / rhs if rhs else 0.0,
        "ratio_star": lhs_s / rhs if rhs else 0.0,
    }


def _grad_bmo(cfg: ExperimentConfig, m: int) -> float:
    amp = amplitude_preset(cfg.amplitude, cfg.dim)
    proto = GridFunction.zeros(cfg.box, m)
    G = amp.grad(proto.points())
    best = 0.0
    for a in range(cfg.dim):
        best = max(best, bmo_seminorm(proto.with_values(G[:, a].reshape(proto.values.shape))))
    return best


def _weighted_rows(cfg: ExperimentConfig, m: int, deltas) -> list[dict]:
    rng = np.random.default_rng(cfg.seed)
    fs = random_sequence(cfg.box, m, cfg.functions, rng, coarse=min(5, m))
    T, Ts = _operator(cfg, m), _operator(cfg, m, "star")
    bmo = _grad_bmo(cfg, m)
    return [_weighted_row(cfg, m, d, fs, T, Ts, bmo) for d in deltas]


def cmd_weighted_bound(cfg: ExperimentConfig) -> ExperimentResult:
    """Left side over right side of the weighted vector-valued bound, across the power-weight sweep."""
    m = cfg.m
    rows = _weighted_rows(cfg, m, [None, *cfg.deltas])
    worst = max(max(r["ratio"], r["ratio_star"]) for r in rows)
    summary = {"max_ratio": worst, "depth": m}
    if cfg.refine:
        d = min(cfg.deltas)
        coarse = rows[-1] if rows[-1]["delta"] == d else next(r for r in rows if r["delta"] == d)
        fine = _weighted_rows(cfg, m + 1, [d])[0]
        _refinement(summary, "ratio_smallest_delta", coarse["ratio"], fine["ratio"])
    cols = list(rows[0].keys())
    swept = [r for r in rows if r["delta"] != "unweighted"]
    plot = {"ratio": ([r["delta"] for r in swept], [r["ratio"] for r in swept]),
            "ratio_star": ([r["delta"] for r in swept], [r["ratio_star"] for r in swept])}
    return ExperimentResult("weighted-bound", cols, rows, summary, plot)


# ---------------------------------------------------------------------------
# endpoint


def _endpoint_rows(cfg: ExperimentConfig, m: int) -> tuple[list[dict], float]:
    rng = np.random.default_rng(cfg.seed)
    fs = random_sequence(cfg.box, m, cfg.functions, rng, coarse=min(5, m))
    F = lq_pointwise(fs, cfg.q)
    if cfg.weight == "unit":
        w = GridFunction.constant(cfg.box, m, 1.0)
    elif cfg.weight == "power":
        if cfg.dim != 1:
            raise ValueError("the power A1 weight preset is one-dimensional")
        w = power_weight(cfg.box, m, -0.5)
    else:
        raise ValueError(f"unknown weight preset {cfg.weight!r}")
    a1 = a1_constant(w)
    ainf = ainf_constant(w)
    V = np.stack([f.values.ravel() for f in fs], axis=1)
    shape = F.values.shape

    def vec_norm(op):
        TV = np.abs(op(V))
        vals = TV.max(axis=1) if math.isinf(cfg.q) else (TV ** cfg.q).sum(axis=1) ** (1 / cfg.q)
        return F.with_values(vals.reshape(shape))

    G = vec_norm(_operator(cfg, m))
    Gs = vec_norm(_operator(cfg, m, "star"))
    lams = lambda_grid(float(F.values.max()))
    pref = a1 * psi2(ainf)
    main = weak_type_check(G, F, lams, 1.0, np.e, weight=w, prefactor=pref)
    star = weak_type_check(Gs, F, lams, 1.0, np.e, weight=w, prefactor=pref)
    both = G.with_values(G.values + Gs.values)
    remark = {}
    for eps in (0.25, 0.5, 1.0):
        Mu = orlicz_maximal(w, eps)
        remark[eps] = weak_type_check(both, F, lams, 1.0, np.e, weight=w, rhs_weight=Mu, prefactor=eps ** -2)
    rows = []
    for i, lam in enumerate(lams):
        row = {"lambda": float(lam), "a1": a1, "ainf": ainf,
               "measure": main.lhs[i], "rhs": main.rhs[i], "ratio": main.ratios[i],
               "measure_star": star.lhs[i], "ratio_star": star.ratios[i]}
        for eps, chk in remark.items():
            row[f"ratio_remark_eps{eps:g}"] = chk.ratios[i]
        rows.append(row)
    worst = max(main.constant, star.constant)
    return rows, worst


def cmd_endpoint(cfg: ExperimentConfig) -> ExperimentResult:
    """Level-set ratios for the ``A_1`` endpoint bound and the ``M_{L(log L)^eps} u`` weak bound."""
    m = cfg.m
    rows, worst = _endpoint_rows(cfg, m)
    summary = {"max_ratio": worst, "depth": m}
    if cfg.refine:
        _, fine = _endpoint_rows(cfg, m + 1)
        _refinement(summary, "max_ratio", worst, fine)
    cols = list(rows[0].keys())
    plot = {"ratio": ([r["lambda"] for r in rows], [r["ratio"] for r in rows])}
    return ExperimentResult("endpoint", cols, rows, summary, plot)


# ---------------------------------------------------------------------------
# Buckley


def _buckley_rows(cfg: ExperimentConfig, m: int, deltas) -> list[dict]:
    if cfg.dim != 1:
        raise ValueError("the maximal-operator sweep is one-dimensional")
    p = cfg.p
    if cfg.source == "indicator":
        f = GridFunction.indicator(BOX_1D, m, 0.0, 1.0)
    elif cfg.source == "power":
        f = None
    else:
        raise ValueError(f"unknown source function {cfg.source!r}")
    rows = []
    for d in deltas:
        w, s = power_weight_pair(BOX_1D, m, p, d)
        g = f
        if g is None:
            # x^(delta-1) on (0, 1) as exact cell averages
            g = GridFunction.from_antiderivative(BOX_1D, m, lambda x: np.clip(x, 0.0, 1.0) ** d / d)
        ap = ap_constant(w, p, sigma=s)
        Mg = hl_maximal(g)
        nf = weighted_lp_norm(g, w, p)
        nM = weighted_lp_norm(Mg, w, p)
        rows.append({"delta": d, "ap_constant": ap, "f_norm": nf, "mf_norm": nM, "ratio": nM / nf})
    return rows


def cmd_buckley(cfg: ExperimentConfig) -> ExperimentResult:
    """``||Mf|| / ||f||`` in ``L^p(w)`` against ``[w]_{A_p}`` for the power-weight sweep."""
    m = cfg.m
    rows = _buckley_rows(cfg, m, cfg.deltas)
    aps = [r["ap_constant"] for r in rows]
    ratios = [r["ratio"] for r in rows]
    slope = loglog_slope(aps, ratios) if len(rows) > 1 else float("nan")
    bound = 1.0 / (cfg.p - 1.0) + 0.2
    for r in rows:
        r["fitted_slope"] = slope
    summary = {"slope": slope, "slope_bound": bound, "within_bound": bool(slope <= bound), "depth": m}
    if cfg.refine:
        d = min(cfg.deltas)
        coarse = next(r for r in rows if r["delta"] == d)
        fine = _buckley_rows(cfg, m + 1, [d])[0]
        _refinement(summary, "ratio_smallest_delta", coarse["ratio"], fine["ratio"])
    cols = ["delta", "ap_constant", "f_norm", "mf_norm", "ratio", "fitted_slope"]
    plot = {"ratio_vs_ap": (aps, ratios)}
    return ExperimentResult("buckley", cols, rows, summary, plot)


COMMANDS = {
    "sharpness": cmd_sharpness,
    "domination": cmd_domination,
    "weighted-bound": cmd_weighted_bound,
    "endpoint": cmd_endpoint,
    "buckley": cmd_buckley,
}
