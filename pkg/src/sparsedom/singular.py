"""Rough kernels, amplitudes and the operator ``T_A`` on a cell grid.

``T_A f(x) = p.v. int Omega(x - y) |x - y|^{-n-1} (A(x) - A(y) - grad A(y).(x - y)) f(y) dy``

is discretised by the midpoint rule with centre-to-centre distances.  The
truncation ``T_{A,eps}`` keeps cells with ``|x - y| >= eps``; the diagonal is
always excluded.  Truncations along the dyadic ladder ``eps_j = h * 2**j``
are obtained in one pass by binning cell pairs into distance shells
``h 2**j <= |x - y| < h 2**(j+1)``; shell membership is decided on integer
cell offsets so it is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .dyadic import Box, GridFunction, all_shifts, level_blocks
from .errors import ResolutionError
from .maximal import SublinearOperator

__all__ = [
    "SphericalKernel",
    "Amplitude",
    "kernel_preset",
    "amplitude_preset",
    "check_vanishing_moment",
    "continuity_modulus",
    "dini_log_integral",
    "DiniLogResult",
    "TAOperator",
    "TruncationLadder",
    "t_a_epsilon",
    "t_a",
    "t_a_ladder",
    "t_a_star",
    "gradient_mean_bound",
    "bmo_seminorm",
]


# ---------------------------------------------------------------------------
# kernels and amplitudes


@dataclass(frozen=True)
class SphericalKernel:
    """Degree-zero kernel ``Omega``.

    In 1-D it is the pair ``(Omega(+1), Omega(-1))``; in 2-D a function of
    the polar angle.
    """

    n: int
    pair: Optional[tuple[float, float]] = None
    angular: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "omega"

    def __post_init__(self):
        if self.n == 1:
            if self.pair is None or len(self.pair) != 2:
                raise ValueError("a 1-D kernel is a pair (Omega(+1), Omega(-1))")
            object.__setattr__(self, "pair", (float(self.pair[0]), float(self.pair[1])))
        elif self.n == 2:
            if self.angular is None:
                raise ValueError("a 2-D kernel needs an angular function")
        else:
            raise ValueError("only dimensions 1 and 2 are supported")

    @classmethod
    def from_samples(cls, theta: np.ndarray, values: np.ndarray, name: str = "sampled") -> "SphericalKernel":
        """Periodic linear interpolation of dense angular samples."""
        theta = np.asarray(theta, dtype=float) % (2 * np.pi)
        order = np.argsort(theta)
        th, va = theta[order], np.asarray(values, dtype=float)[order]
        th = np.r_[th[-1] - 2 * np.pi, th, th[0] + 2 * np.pi]
        va = np.r_[va[-1], va, va[0]]
        return cls(2, angular=lambda t: np.interp(np.mod(t, 2 * np.pi), th, va), name=name)

    def at_angle(self, theta) -> np.ndarray:
        if self.n != 2:
            raise ValueError("angles only parametrise the circle")
        return np.asarray(self.angular(np.asarray(theta, dtype=float)), dtype=float)

    def of_displacement(self, d: np.ndarray) -> np.ndarray:
        """``Omega(d / |d|)`` for displacements of shape ``(..., n)`` (0 at ``d = 0``)."""
        if self.n == 1:
            d = d[..., 0]
            return np.where(d > 0, self.pair[0], np.where(d < 0, self.pair[1], 0.0))
        return self.at_angle(np.arctan2(d[..., 1], d[..., 0]))

    def sup(self, samples: int = 4096) -> float:
        if self.n == 1:
            return max(abs(self.pair[0]), abs(self.pair[1]))
        return float(np.max(np.abs(self.at_angle(np.linspace(0, 2 * np.pi, samples, endpoint=False)))))


@dataclass(frozen=True)
class Amplitude:
    """The function ``A`` and its gradient, evaluated on points of shape ``(..., n)``."""

    n: int
    A: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    name: str = "A"

    def gradient_error(self, points: np.ndarray, step: float = 1e-6) -> float:
        """Max deviation of ``grad`` from central differences of ``A`` at ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        g = self.grad(points)
        worst = 0.0
        for a in range(self.n):
            e = np.zeros(self.n)
            e[a] = step
            fd = (self.A(points + e) - self.A(points - e)) / (2 * step)
            worst = max(worst, float(np.max(np.abs(fd - g[:, a]))))
        return worst


def _xlogx_1d():
    def A(p):
        y = p[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(y == 0, 0.0, y * np.log(np.abs(y)))

    def grad(p):
        with np.errstate(divide="ignore"):
            return (1.0 + np.log(np.abs(p[..., 0])))[..., None]

    return Amplitude(1, A, grad, "xlogx")


def _xlogx_2d():
    def A(p):
        r = np.hypot(p[..., 0], p[..., 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r == 0, 0.0, p[..., 0] * np.log(r))

    def grad(p):
        y1, y2 = p[..., 0], p[..., 1]
        r2 = y1 * y1 + y2 * y2
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = 0.5 * np.log(r2) + y1 * y1 / r2
            g2 = y1 * y2 / r2
        return np.stack([g1, g2], axis=-1)

    return Amplitude(2, A, grad, "xlogx")


def _affine(n: int, c: float):
    slope = np.full(n, float(c))

    def A(p):
        return p @ slope + 0.5

    def grad(p):
        return np.broadcast_to(slope, p.shape).copy()

    return Amplitude(n, A, grad, f"affine:{c:g}")


def kernel_preset(name: str, n: int) -> SphericalKernel:
    """``const1`` (n = 1, 2), ``cos2theta`` and ``costheta`` (n = 2)."""
    if name == "const1":
        if n == 1:
            return SphericalKernel(1, pair=(1.0, 1.0), name=name)
        return SphericalKernel(2, angular=lambda t: np.ones_like(t), name=name)
    if n == 2 and name == "cos2theta":
        return SphericalKernel(2, angular=lambda t: np.cos(2 * t), name=name)
    if n == 2 and name == "costheta":
        return SphericalKernel(2, angular=np.cos, name=name)
    raise ValueError(f"unknown kernel preset {name!r} for n={n}")


def amplitude_preset(name: str, n: int) -> Amplitude:
    """``xlogx`` (``y log|y|`` in 1-D, ``y_1 log|y|`` in 2-D) or ``affine:<c>``."""
    if name == "xlogx":
        return _xlogx_1d() if n == 1 else _xlogx_2d()
    if name.startswith("affine:"):
        try:
            c = float(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad affine slope in {name!r}") from None
        return _affine(n, c)
    raise ValueError(f"unknown amplitude preset {name!r}")


# ---------------------------------------------------------------------------
# kernel diagnostics


def check_vanishing_moment(kernel: SphericalKernel, samples: int = 4096) -> np.ndarray:
    """First spherical moments of ``Omega``, one per coordinate."""
    if kernel.n == 1:
        return np.array([kernel.pair[0] - kernel.pair[1]])
    th = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    om = kernel.at_angle(th)
    dth = 2 * np.pi / samples
    return np.array([np.sum(om * np.cos(th)) * dth, np.sum(om * np.sin(th)) * dth])


def continuity_modulus(kernel: SphericalKernel, t: float, n_theta: int = 2048, n_phi: int = 129) -> float:
    """``sup_{|rho| < t} sup_x' |Omega(rho x') - Omega(x')|`` over rotations ``rho``.

    A rotation by ``phi`` moves unit vectors by ``2 sin(phi/2)``; the grid
    maximum is polished with a bounded local optimiser.
    """
    if kernel.n == 1:
        return 0.0
    if t <= 0:
        return 0.0
    phi_max = np.pi if t >= 2 else 2 * math.asin(t / 2)
    phi = np.linspace(-phi_max, phi_max, n_phi)
    th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    base = kernel.at_angle(th)
    D = np.abs(kernel.at_angle(th[None, :] + phi[:, None]) - base[None, :])
    i, j = np.unravel_index(np.argmax(D), D.shape)
    best = float(D[i, j])
    if best == 0.0:
        return 0.0

    def neg(v):
        return -float(abs(kernel.at_angle(v[1] + v[0]) - kernel.at_angle(v[1])))

    res = optimize.minimize(neg, x0=[phi[i], th[j]], method="L-BFGS-B",
                            bounds=[(-phi_max, phi_max), (None, None)],
                            options={"ftol": 1e-15, "gtol": 1e-12})
    return max(best, -float(res.fun))


@dataclass(frozen=True)
class DiniLogResult:
    value: float
    last_decade: float
    t_min: float


def dini_log_integral(kernel: SphericalKernel, t_min: float = 1e-6, per_decade: int = 16) -> DiniLogResult:
    """Partial integral ``int_{t_min}^1 omega(t) (1 + |log t|) dt / t``.

    Gauss-Legendre per decade in ``u = log t``.  Also reports the
    contribution of the decade nearest ``t_min``.
    """
    if not 0 < t_min < 1:
        raise ValueError("t_min must lie in (0, 1)")
    if kernel.n == 1:
        return DiniLogResult(0.0, 0.0, t_min)
    lo = math.log(t_min)
    decades = max(1, math.ceil(-math.log10(t_min) - 1e-12))
    edges = np.linspace(lo, 0.0, decades + 1)
    xg, wg = np.polynomial.legendre.leggauss(per_decade)
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * xg + 0.5 * (a + b)
        om = np.array([continuity_modulus(kernel, math.exp(v)) for v in u])
        parts.append(0.5 * (b - a) * float(np.sum(wg * om * (1 - u))))
    return DiniLogResult(float(sum(parts)), parts[0], t_min)


# ---------------------------------------------------------------------------
# the operator on a grid


class _Geometry:
    """Cell midpoints, integer coordinates and amplitude samples of a grid."""

    def __init__(self, kernel: SphericalKernel, amp: Amplitude, box: Box, m: int):
        if kernel.n != box.n or amp.n != box.n:
            raise ValueError("kernel, amplitude and box dimensions differ")
        self.kernel, self.amp, self.box, self.m = kernel, amp, box, m
        proto = GridFunction.zeros(box, m)
        self.h = proto.h
        self.n = box.n
        self.cells = proto.values.size
        self.points = proto.points()
        self.icoords = np.indices(proto.values.shape).reshape(box.n, -1).T.astype(np.int64)
        self.Av = np.asarray(amp.A(self.points), dtype=float)
        self.G = np.asarray(amp.grad(self.points), dtype=float).reshape(self.cells, self.n)
        self.nshell = m + 1 if self.n == 2 else max(m, 1)
        self._dense = None

    def block(self, rows: np.ndarray, cols: np.ndarray):
        """Kernel weights (incl. cell volume), the |.|-scale and shell index for ``rows x cols``."""
        if self._dense is not None:
            K, S, sh = self._dense
            return K[np.ix_(rows, cols)], S[np.ix_(rows, cols)], sh[np.ix_(rows, cols)]
        n, h = self.n, self.h
        D = self.points[rows][:, None, :] - self.points[cols][None, :, :]
        I = self.icoords[rows][:, None, :] - self.icoords[cols][None, :, :]
        d2 = np.sum(I * I, axis=-1)
        diag = d2 == 0
        r = h * np.sqrt(d2.astype(float))
        r[diag] = 1.0
        lin = np.einsum("cn,rcn->rc", self.G[cols], D)
        Ax, Ay = self.Av[rows][:, None], self.Av[cols][None, :]
        num = (Ax - Ay) - lin
        scale = np.abs(Ax) + np.abs(Ay) + np.abs(lin)
        om = self.kernel.of_displacement(D)
        vol = h ** n / r ** (n + 1)
        K = om * num * vol
        S = np.abs(om) * scale * vol
        K[diag] = 0.0
        S[diag] = 0.0
        # h 2^j <= r < h 2^(j+1)  <=>  4^j <= d2 < 4^(j+1)
        bits = _bit_length(d2)
        shell = (bits - 1) // 2 if n == 2 else _bit_length(np.rint(np.sqrt(d2))) - 1
        shell[diag] = -1
        return K, S, shell

    def densify(self, limit: int = 2048):
        if self._dense is None and self.cells <= limit:
            idx = np.arange(self.cells)
            self._dense = self.block(idx, idx)
        return self


def _bit_length(a: np.ndarray) -> np.ndarray:
    """``int.bit_length`` for non-negative integers below ``2**53`` (exact via frexp)."""
    return np.frexp(np.asarray(a, dtype=float))[1].astype(np.int64)


class TAOperator(SublinearOperator):
    """``T_A`` (or ``T_A*``) as an operator handle for the grand maximal function.

    ``mode`` is ``"pv"`` (smallest truncation), ``"star"`` (max over the
    dyadic ladder) or ``"eps"`` with a fixed ``eps``.
    """

    def __init__(self, kernel: SphericalKernel, amp: Amplitude, box: Box, m: int,
                 mode: str = "pv", eps: Optional[float] = None, dense_limit: int = 2048,
                 chunk_pairs: int = 2 ** 22):
        if mode not in ("pv", "star", "eps"):
            raise ValueError(f"unknown mode {mode!r}")
        self.geom = _Geometry(kernel, amp, box, m).densify(dense_limit)
        self.mode = mode
        self.chunk_pairs = chunk_pairs
        if mode == "eps":
            if eps is None:
                raise ValueError("fixed-truncation mode needs eps")
            if eps < self.geom.h * (1 - 1e-12):
                raise ResolutionError(f"eps={eps} is below the cell width {self.geom.h}")
        self.eps = eps
        super().__init__(self._apply_rows, True, "T_A*" if mode == "star" else "T_A")

    @property
    def ladder_eps(self) -> np.ndarray:
        return self.geom.h * 2.0 ** np.arange(self.geom.nshell)

    def _chunks(self, rows, ncols):
        step = max(1, self.chunk_pairs // max(ncols, 1))
        for s in range(0, rows.size, step):
            yield rows[s:s + step]

    def shells(self, values: np.ndarray, support=None, rows=None, with_scale: bool = False):
        """Per-row shell sums, shape ``(rows, k, nshell)`` (and matching |.|-scales)."""
        g = self.geom
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        rows = np.arange(g.cells) if rows is None else np.asarray(rows)
        active = np.any(values != 0, axis=1)
        if support is not None:
            active &= np.asarray(support, dtype=bool).ravel()
        cols = np.flatnonzero(active)
        k = values.shape[1]
        out = np.zeros((rows.size, k, g.nshell))
        sc = np.zeros_like(out) if with_scale else None
        if cols.size == 0:
            return (out, sc) if with_scale else out
        pos = 0
        for rc in self._chunks(rows, cols.size):
            K, S, shell = g.block(rc, cols)
            local = np.arange(rc.size)[:, None] * g.nshell + shell
            keep = shell >= 0
            idx = local[keep]
            for j in range(k):
                v = values[cols, j]
                out[pos:pos + rc.size, j] = np.bincount(
                    idx, weights=(K * v[None, :])[keep], minlength=rc.size * g.nshell
                ).reshape(rc.size, g.nshell)
                if with_scale:
                    sc[pos:pos + rc.size, j] = np.bincount(
                        idx, weights=(S * np.abs(v)[None, :])[keep], minlength=rc.size * g.nshell
                    ).reshape(rc.size, g.nshell)
            pos += rc.size
        return (out, sc) if with_scale else out

    def _fixed_eps(self, values, support, rows):
        g = self.geom
        active = np.any(values != 0, axis=1)
        if support is not None:
            active &= np.asarray(support, dtype=bool).ravel()
        cols = np.flatnonzero(active)
        out = np.zeros((rows.size, values.shape[1]))
        if cols.size == 0:
            return out
        pos = 0
        for rc in self._chunks(rows, cols.size):
            K, _, _ = g.block(rc, cols)
            I = g.icoords[rc][:, None, :] - g.icoords[cols][None, :, :]
            r = g.h * np.sqrt(np.sum(I * I, axis=-1).astype(float))
            K = np.where(r >= self.eps * (1 - 1e-12), K, 0.0)
            out[pos:pos + rc.size] = K @ values[cols]
            pos += rc.size
        return out

    def _apply_rows(self, values, support, rows):
        if self.mode == "eps":
            return self._fixed_eps(values, support, rows)
        if self.mode == "pv" and self.geom._dense is not None:
            K = self.geom._dense[0]
            active = np.any(values != 0, axis=1)
            if support is not None:
                active &= np.asarray(support, dtype=bool).ravel()
            cols = np.flatnonzero(active)
            if cols.size == 0:
                return np.zeros((rows.size, values.shape[1]))
            return K[np.ix_(rows, cols)] @ values[cols]
        sh = self.shells(values, support, rows)
        if self.mode == "pv":
            return sh.sum(axis=-1)
        ladder = np.cumsum(sh[..., ::-1], axis=-1)[..., ::-1]
        return np.abs(ladder).max(axis=-1)


@dataclass
class TruncationLadder:
    """``T_{A,eps_j} f`` for ``eps_j = h 2**j`` and its Cauchy diagnostic."""

    eps: np.ndarray
    values: np.ndarray          # (len(eps),) + grid shape
    scale: float                # size of the absolute integrand, for relative tolerances
    increments: np.ndarray      # max_x |T_{eps_j} - T_{eps_{j+1}}|
    template: GridFunction = field(repr=False)
    cauchy_tol: float = 1e-2

    @property
    def finest(self) -> GridFunction:
        return self.template.with_values(self.values[0])

    @property
    def star(self) -> GridFunction:
        return self.template.with_values(np.abs(self.values).max(axis=0))

    @property
    def cauchy(self) -> bool:
        """Whether the finest increment is small relative to the operator's size."""
        size = max(float(np.abs(self.values).max()), np.finfo(float).tiny)
        return bool(self.increments.size == 0 or self.increments[0] <= self.cauchy_tol * size)


def _operator(kernel, amp, f: GridFunction, mode="pv", eps=None) -> TAOperator:
    return TAOperator(kernel, amp, f.box, f.m, mode=mode, eps=eps)


def t_a_epsilon(kernel: SphericalKernel, amp: Amplitude, f: GridFunction, eps: float) -> GridFunction:
    """Truncated operator over cells with centre distance ``>= eps``."""
    return _operator(kernel, amp, f, "eps", eps).apply_to(f)


def t_a_ladder(kernel: SphericalKernel, amp: Amplitude, f: GridFunction,
               cauchy_tol: float = 1e-2) -> TruncationLadder:
    op = _operator(kernel, amp, f)
    sh, sc = op.shells(f.values.ravel(), with_scale=True)
    sh, sc = sh[:, 0, :], sc[:, 0, :]
    ladder = np.cumsum(sh[:, ::-1], axis=1)[:, ::-1].T
    scale = float(sc.sum(axis=1).max()) if sc.size else 0.0
    inc = np.abs(np.diff(ladder, axis=0)).max(axis=1) if ladder.shape[0] > 1 else np.zeros(0)
    return TruncationLadder(op.ladder_eps, ladder.reshape((-1,) + f.values.shape), scale, inc, f, cauchy_tol)


def t_a(kernel: SphericalKernel, amp: Amplitude, f: GridFunction) -> GridFunction:
    """Principal value: the truncation at one cell width (diagonal excluded)."""
    return _operator(kernel, amp, f).apply_to(f)


def t_a_star(kernel: SphericalKernel, amp: Amplitude, f: GridFunction) -> GridFunction:
    """``max_j |T_{A, h 2**j} f|`` over the dyadic ladder up to the box diameter."""
    return _operator(kernel, amp, f, "star").apply_to(f)


# ---------------------------------------------------------------------------
# auxiliary bounds


def gradient_mean_bound(amp: Amplitude, x, y, q: float = 2.0, points: int = 256) -> tuple[float, float]:
    """``(|A(x) - A(y)|, |x - y| (<|grad A|^q>_I)^(1/q))`` with ``I`` centred at ``x``, side ``2|x - y|``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lhs = float(abs(amp.A(x[None])[0] - amp.A(y[None])[0]))
    dist = float(np.linalg.norm(x - y))
    if dist == 0.0:
        return lhs, 0.0
    if amp.n == 1:
        a, b = x[0] - dist, x[0] + dist
        g = lambda s: abs(amp.grad(np.array([[s]]))[0, 0]) ** q
        brk = [0.0] if a < 0 < b else None
        val, _ = integrate.quad(g, a, b, points=brk, limit=200)
        avg = val / (b - a)
    else:
        u = (np.arange(points) + 0.5) / points * 2 * dist - dist
        P = np.stack(np.meshgrid(x[0] + u, x[1] + u, indexing="ij"), axis=-1)
        G = np.linalg.norm(amp.grad(P), axis=-1)
        avg = float(np.mean(G[np.isfinite(G)] ** q))
    return lhs, dist * avg ** (1.0 / q)


def bmo_seminorm(g: GridFunction, depth: Optional[int] = None) -> float:
    """``sup_Q <|g - <g>_Q|>_Q`` over in-box cubes of the shifted grids."""
    depth = g.m if depth is None else min(depth, g.m)
    best = 0.0
    for t in all_shifts(g.n):
        for level in range(depth + 1):
            lb = level_blocks(g.values, t, level, g.m)
            inside = lb.inside()
            if not inside.any():
                continue
            b = lb.blocks[inside]
            osc = np.abs(b - b.mean(axis=-1, keepdims=True)).mean(axis=-1)
            best = max(best, float(osc.max()))
    return best
