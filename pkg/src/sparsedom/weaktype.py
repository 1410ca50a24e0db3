"""Level-set (weak-type) inequality checks on a grid.

Every check compares, over a grid of levels ``lam``,

    measure_w({x : G(x) > lam})   against   C * int Phi(F / lam) v dx

and records the smallest admissible ``C`` (the max over levels of the
ratio).  ``Phi(t) = t log^beta(base + t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dyadic import GridFunction
from .orlicz import young

__all__ = ["WeakCheck", "lambda_grid", "weak_type_check", "psi2"]


def psi2(t: float) -> float:
    """``log(e + t)**2``."""
    return float(np.log(np.e + t) ** 2)


def lambda_grid(scale: float, count: int = 16, lo: float = 1e-2, hi: float = 10.0) -> np.ndarray:
    """``count`` log-spaced levels in ``[lo, hi] * scale``."""
    if not scale > 0:
        raise ValueError("level scale must be positive")
    return scale * np.logspace(np.log10(lo), np.log10(hi), count)


@dataclass(frozen=True)
class WeakCheck:
    lambdas: np.ndarray
    lhs: np.ndarray       # weighted measure of {G > lam}
    rhs: np.ndarray       # prefactor * int Phi(F/lam) v
    ratios: np.ndarray    # lhs / rhs (0 where lhs = 0)

    @property
    def constant(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    def holds(self, C: float) -> bool:
        return bool(np.all(self.lhs <= C * self.rhs * (1 + 1e-12)))


def weak_type_check(G: GridFunction, F: GridFunction, lambdas, beta: float = 1.0, base: float = 1.0,
                    weight: Optional[GridFunction] = None, rhs_weight: Optional[GridFunction] = None,
                    prefactor: float = 1.0) -> WeakCheck:
    """Per-level ratios for ``w({G > lam}) <= C prefactor int Phi(|F|/lam) v``.

    ``weight`` is ``w`` (Lebesgue if ``None``); ``rhs_weight`` is ``v``
    (defaults to ``weight``).
    """
    lambdas = np.asarray(lambdas, dtype=float)
    gv = np.abs(G.values)
    fv = np.abs(F.values)
    w = np.ones(gv.shape) if weight is None else weight.values
    v = w if rhs_weight is None else rhs_weight.values
    vol = G.cell_volume
    lhs = np.array([w[gv > lam].sum() * vol for lam in lambdas])
    rhs = np.array([prefactor * (young(fv / lam, beta, base) * v).sum() * vol for lam in lambdas])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(lhs > 0, lhs / rhs, 0.0)
    return WeakCheck(lambdas, lhs, rhs, ratios)
