"""Power-law extremiser for the weighted ``T_A`` bound in one dimension.

Data: ``f(x) = x**(delta - 1)`` on ``(0, 1)``, ``A(y) = y log|y|``, ``Omega = 1``
and ``w(x) = |x|**((p - 1)(1 - delta))``.  For ``x`` in ``(0, 1)`` the kernel
numerator is ``x log(x/y) - x + y`` and the integral is absolutely
convergent.  Substituting ``y = x t`` and then ``t = 1/s`` on ``t > 1`` gives

    T_A f(x) = x**(delta - 1) * J(x),   J(x) = G + int_x^1 h(s) ds,

    G = int_0^1 (log(1/t) - 1 + t) / (1 - t)**2 * t**(delta - 1) dt,
    h(s) = (s log s - s + 1) / (s - 1)**2 * s**(-delta).

Both integrands are bounded near the removable point ``1`` (limit ``1/2``).
The weighted norms over ``(0, 1)`` become integrals in ``u = log x``:

    ||f||^p = int e^{delta u} du = 1/delta,
    ||T_A f||^p = int e^{delta u} J(e^u)**p du,

evaluated with the midpoint rule on ``2**depth`` cells of ``[U, 0]`` plus the
analytic tail below ``U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "SharpnessNorms",
    "g_integrand",
    "h_integrand",
    "g_constant",
    "log_grid",
    "j_profile",
    "ta_profile",
    "ta_direct",
    "sharpness_norms",
]

_SERIES = 0.25
_TERMS = 30


def _exp_excess(z: np.ndarray) -> np.ndarray:
    """``e**z - 1 - z`` without cancellation near 0."""
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.reshape(-1)
    out = np.expm1(z) - z
    small = np.abs(z) < _SERIES
    if small.any():
        zs = z[small]
        acc = np.zeros_like(zs)
        term = zs.copy()
        for k in range(2, _TERMS):
            term = term * zs / k
            acc += term
        out[small] = acc
    return out.reshape(shape)


def _log_excess(v: np.ndarray) -> np.ndarray:
    """``1 + e**v (v - 1)`` without cancellation near 0 (series ``sum (k-1) v**k / k!``)."""
    v = np.asarray(v, dtype=float)
    shape = v.shape
    v = v.reshape(-1)
    out = 1.0 + np.exp(v) * (v - 1.0)
    small = np.abs(v) < _SERIES
    if small.any():
        vs = v[small]
        acc = np.zeros_like(vs)
        term = vs.copy()
        for k in range(2, _TERMS):
            term = term * vs / k
            acc += (k - 1) * term
        out[small] = acc
    return out.reshape(shape)


def g_integrand(s, delta: float) -> np.ndarray:
    """Integrand of ``G`` after ``t = e**-s``: ``(s - 1 + e**-s) / (1 - e**-s)**2 * e**(-delta s)``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = _exp_excess(-s) / np.expm1(-s) ** 2 * np.exp(-delta * s)
    return np.where(s == 0, 0.5, val)


def h_integrand(v, delta: float) -> np.ndarray:
    """``h(e**v) e**v``, the integrand of ``int_x^1 h`` in ``v = log s``."""
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = _log_excess(v) / np.expm1(v) ** 2 * np.exp((1.0 - delta) * v)
    return np.where(v == 0, 0.5, val)


def g_constant(delta: float) -> float:
    """``G = J(1)``."""
    val, _ = integrate.quad(g_integrand, 0.0, np.inf, args=(delta,), epsabs=0, epsrel=1e-13, limit=400)
    return val


def _h_total(delta: float) -> float:
    val, _ = integrate.quad(h_integrand, -np.inf, 0.0, args=(delta,), epsabs=0, epsrel=1e-13, limit=400)
    return val


def log_grid(delta: float, depth: int) -> tuple[float, np.ndarray, float]:
    """``(U, midpoints, du)`` for ``2**depth`` cells on ``[U, 0]`` in ``u = log x``.

    ``U = -40/delta`` (clamped to stay above the double range) makes the
    neglected tail ``e**(delta U)/delta`` smaller than ``1e-17/delta``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    U = max(-40.0 / delta, math.log(1e-300))
    K = 2 ** depth
    du = -U / K
    mids = U + (np.arange(K) + 0.5) * du
    return U, mids, du


def j_profile(delta: float, u: np.ndarray, order: int = 8) -> np.ndarray:
    """``J(e**u)`` at increasing nodes ``u <= 0`` by Gauss-Legendre panels between nodes."""
    u = np.asarray(u, dtype=float)
    if np.any(np.diff(u) <= 0) or (u.size and u[-1] > 0):
        raise ValueError("nodes must be increasing and non-positive")
    nodes = np.r_[u, 0.0]
    a, b = nodes[:-1], nodes[1:]
    xg, wg = np.polynomial.legendre.leggauss(order)
    pts = 0.5 * (b - a)[:, None] * xg[None, :] + 0.5 * (a + b)[:, None]
    panel = 0.5 * (b - a) * (h_integrand(pts, delta) @ wg)
    tail = np.cumsum(panel[::-1])[::-1]
    return g_constant(delta) + tail


def ta_profile(delta: float, x: np.ndarray) -> np.ndarray:
    """``T_A f(x)`` for ``x`` in ``(0, 1]`` from the substituted form."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x)
    u = np.log(x[order])
    J = np.empty_like(x)
    J[order] = j_profile(delta, u)
    return x ** (delta - 1.0) * J


def ta_direct(x: float, delta: float) -> float:
    """``T_A f(x)`` by adaptive quadrature of the untransformed ``y``-integral (independent check)."""
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")

    def numer_over_sq(y):
        d = x - y
        r = d / x
        if abs(r) < 1e-4:
            # x log(x/y) - x + y = x * (-log(1 - r) - r) with r = (x - y)/x
            return x * sum(r ** k / k for k in range(2, 8)) / d ** 2
        return (x * math.log(x / y) - x + y) / d ** 2

    half = 0.5 * x
    left, _ = integrate.quad(lambda y: numer_over_sq(y) if y > 0 else 0.0, 0.0, half,
                             weight="alg", wvar=(delta - 1.0, 0.0), limit=400, epsabs=0, epsrel=1e-11)
    mid, _ = integrate.quad(lambda y: numer_over_sq(y) * y ** (delta - 1.0), half, x,
                            limit=400, epsabs=0, epsrel=1e-11)
    right, _ = integrate.quad(lambda y: numer_over_sq(y) * y ** (delta - 1.0), x, 1.0,
                              limit=400, epsabs=0, epsrel=1e-11)
    return left + mid + right


@dataclass(frozen=True)
class SharpnessNorms:
    delta: float
    p: float
    depth: int
    f_norm_p: float      # ||f||_{L^p(w)}^p
    ta_norm_p: float     # ||T_A f||_{L^p(w)}^p over (0, 1)

    @property
    def f_norm(self) -> float:
        return self.f_norm_p ** (1.0 / self.p)

    @property
    def ta_norm(self) -> float:
        return self.ta_norm_p ** (1.0 / self.p)

    @property
    def ratio(self) -> float:
        return self.ta_norm / self.f_norm


def sharpness_norms(delta: float, p: float, depth: int) -> SharpnessNorms:
    """Weighted ``L^p`` norms of ``f`` and ``T_A f`` (the latter over ``(0, 1)``)."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    U, u, du = log_grid(delta, depth)
    J = j_profile(delta, u)
    e = np.exp(delta * u)
    tail = math.exp(delta * U) / delta
    j_inf = g_constant(delta) + _h_total(delta)
    f_p = float(np.sum(e) * du + tail)
    ta_p = float(np.sum(e * J ** p) * du + j_inf ** p * tail)
    return SharpnessNorms(delta, p, depth, f_p, ta_p)
