"""Radial reductions of the single-mode problem.

The vertical average V(r) of a single mode satisfies

    V'' + b V' - lam V / r^2 = A' + B,      b = (n-2)/r + 2a(r-r0)_+ / (eps + a(r-r0)_+^2),

with lam = k(k+n-3).  This module provides the drift b, its closed-form log
integrating factor, the homogeneous solution h (h(0) = 0, h(1) = 1), recovery of V'
by reduction of order V = h w, and the exponent schedule of the bootstrap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import DomainError, SolverError
from .geometry import ProblemConfig

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "HomogeneousSolution",
    "radial_grid",
    "drift",
    "log_integrating_factor",
    "log_integrating_factor_quad",
    "solve_radial_bvp",
    "solve_homogeneous",
    "reduce_order_vprime",
    "bootstrap_schedule",
]

_GX, _GW = np.polynomial.legendre.leggauss(4)


# --------------------------------------------------------------------------- grids


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing radial nodes; ``breaks`` are nodes where data may kink."""

    nodes: np.ndarray
    breaks: tuple = ()

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0):
            raise ValueError("radial nodes must be strictly increasing")
        object.__setattr__(self, "nodes", r)

    @property
    def size(self) -> int:
        return self.nodes.size

    def index_of(self, r: float) -> int:
        i = int(np.argmin(np.abs(self.nodes - r)))
        if abs(self.nodes[i] - r) > 1e-13 * max(1.0, abs(r)):
            raise KeyError(f"{r} is not a grid node")
        return i

    def refined(self, levels: int = 1) -> "RadialGrid":
        """Insert midpoints ``levels`` times (halves every spacing)."""
        r = self.nodes
        for _ in range(levels):
            mid = 0.5 * (r[1:] + r[:-1])
            r = np.sort(np.concatenate([r, mid]))
        return RadialGrid(r, self.breaks)

    def restrict(self, lo: float, hi: float = np.inf) -> "RadialGrid":
        keep = (self.nodes >= lo - 1e-15) & (self.nodes <= hi + 1e-15)
        br = tuple(b for b in self.breaks if lo <= b <= hi)
        return RadialGrid(self.nodes[keep], br)


def _graded_segment(p, q, spacing):
    """Nodes on [p, q] following a target spacing function, endpoints exact."""
    if q - p <= 0:
        return np.array([p])
    fine = np.linspace(p, q, 20001)
    dens = 1.0 / spacing(fine)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(fine))])
    m = max(int(math.ceil(s[-1])), 2)
    return np.interp(np.linspace(0.0, s[-1], m + 1), s, fine)


def radial_grid(
    r0: float,
    epsilon: float,
    h_max: float = 0.02,
    ratio: float = 1.1,
    h_min: float | None = None,
    h_axis: float | None = None,
    h_wall: float | None = None,
    include_zero: bool = True,
    refine: int = 0,
) -> RadialGrid:
    """Graded radial grid on [0, 1] (or (0, 1]).

    Spacing is ``h_min`` (default sqrt(eps)/8) on the transition band
    |r - r0| <= sqrt(eps) and grows geometrically with ``ratio`` away from it, capped
    at ``h_max``.  Nodes also cluster mildly toward the axis and the wall r = 1.
    r0/2, r0, 3/4 and 1 are exact nodes.
    """
    se = math.sqrt(epsilon)
    h_min = se / 8 if h_min is None else h_min
    h_axis = h_max / 4 if h_axis is None else h_axis
    h_wall = h_max / 2 if h_wall is None else h_wall
    g = ratio - 1.0

    def spacing(r):
        s = h_min + g * np.maximum(np.abs(r - r0) - se, 0.0)
        s = np.minimum(s, h_axis + g * r)
        s = np.minimum(s, h_wall + g * (1.0 - r))
        return np.minimum(s, h_max)

    cuts = [0.0] + ([r0 / 2, r0] if r0 > 0 else []) + [0.75, 1.0]
    pieces = [_graded_segment(p, q, spacing) for p, q in zip(cuts[:-1], cuts[1:])]
    r = np.unique(np.concatenate(pieces))
    if not include_zero:
        r = r[r > 0]
    breaks = (r0,) if r0 > 0 else ()
    grid = RadialGrid(r, breaks)
    return grid.refined(refine) if refine else grid


# --------------------------------------------------------------------------- functions


def _gauss(nodes):
    """Gauss points and weights per interval, shape (len(nodes) - 1, 4)."""
    a, b = nodes[:-1, None], nodes[1:, None]
    half = 0.5 * (b - a)
    return a + half * (_GX + 1.0), half * _GW


class RadialFunction:
    """A function sampled on radial nodes, interpolated by piecewise cubic splines.

    Splines are fit separately between consecutive ``breaks`` so that kinks at r0 do
    not ring.
    """

    def __init__(self, nodes, values, breaks=()):
        self.nodes = np.asarray(nodes, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != self.nodes.shape:
            raise ValueError("nodes and values must have the same shape")
        self.breaks = tuple(b for b in breaks if self.nodes[0] < b < self.nodes[-1])
        edges = [self.nodes[0], *self.breaks, self.nodes[-1]]
        self._pieces = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            m = (self.nodes >= lo - 1e-15) & (self.nodes <= hi + 1e-15)
            x, y = self.nodes[m], self.values[m]
            bc = "not-a-knot" if x.size >= 4 else "natural"
            self._pieces.append((lo, hi, CubicSpline(x, y, bc_type=bc) if x.size >= 2 else None))

    @classmethod
    def on(cls, grid: RadialGrid, values) -> "RadialFunction":
        return cls(grid.nodes, values, grid.breaks)

    def _piece_index(self, r):
        edges = np.array([p[1] for p in self._pieces[:-1]])
        return np.searchsorted(edges, r, side="left")

    def __call__(self, r, nu: int = 0):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        idx = self._piece_index(r)
        for j, (_, _, sp) in enumerate(self._pieces):
            m = idx == j
            if np.any(m):
                out[m] = sp(r[m], nu)
        if nu == 0:
            # exact reproduction at nodes
            pos = np.searchsorted(self.nodes, r)
            pos = np.clip(pos, 0, self.nodes.size - 1)
            hit = np.isclose(self.nodes[pos], r, rtol=0, atol=0)
            out[hit] = self.values[pos[hit]]
        return out

    def derivative(self, r):
        return self(r, 1)

    def cumulative_integral(self):
        """Values of int_{nodes[0]}^{r_j} f at every node (composite 4-point Gauss)."""
        t, w = _gauss(self.nodes)
        per = np.sum(w * self(t), axis=1)
        return np.concatenate([[0.0], np.cumsum(per)])

    def integrate(self) -> float:
        return float(self.cumulative_integral()[-1])


# --------------------------------------------------------------------------- drift


def _transition(cfg: ProblemConfig, r):
    d = np.maximum(np.asarray(r, dtype=float) - cfg.r0, 0.0)
    return d, cfg.epsilon + cfg.a * d**2


def drift(cfg: ProblemConfig, r):
    """b(r) = (n-2)/r + 2a(r-r0)_+ / (eps + a(r-r0)_+^2)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("drift is defined for r > 0")
    d, G = _transition(cfg, r)
    return (cfg.n - 2) / r + 2.0 * cfg.a * d / G


def _base_point(cfg: ProblemConfig) -> float:
    s0 = cfg.r0 / 2
    if s0 == 0.0 and cfg.n > 2:
        raise DomainError("the integrating factor from r0/2 = 0 diverges for n > 2")
    return s0


def log_integrating_factor(cfg: ProblemConfig, t):
    """int_{r0/2}^t b(s) ds in closed form."""
    s0 = _base_point(cfg)
    t = np.asarray(t, dtype=float)
    if np.any(t < s0):
        raise DomainError("t must be >= r0/2")
    _, G = _transition(cfg, t)
    radial = (cfg.n - 2) * (np.log(t) - np.log(s0)) if cfg.n > 2 else 0.0
    return radial + np.log(G / cfg.epsilon)


def log_integrating_factor_quad(cfg: ProblemConfig, t: float, b=None) -> float:
    """Adaptive-quadrature evaluation of the same integral (``b`` overrides the drift)."""
    b = drift if b is None else b
    s0 = _base_point(cfg)
    if t < s0:
        raise DomainError("t must be >= r0/2")
    if t == s0:
        return 0.0
    pts = [p for p in (cfg.r0, cfg.r0 + math.sqrt(cfg.epsilon)) if s0 < p < t]
    lo = max(s0, 1e-300)
    val, _ = quad(lambda s: float(b(cfg, s)), lo, t, points=pts or None,
                  epsabs=0.0, epsrel=1e-13, limit=400)
    return val


# --------------------------------------------------------------------------- BVP


def solve_radial_bvp(cfg: ProblemConfig, nodes, rhs, left: float, right: float):
    """Second-order central differences for h'' + b h' - lam h / r^2 = rhs.

    Dirichlet values at both ends of ``nodes`` (which must be > 0).
    """
    r = np.asarray(nodes, dtype=float)
    m = r.size
    if m < 3:
        raise ValueError("need at least three nodes")
    lam = cfg.eigenvalue
    dm = r[1:-1] - r[:-2]
    dp = r[2:] - r[1:-1]
    b = drift(cfg, r[1:-1])
    # h'' weights
    c2m = 2.0 / (dm * (dm + dp))
    c2p = 2.0 / (dp * (dm + dp))
    c2c = -c2m - c2p
    # h' weights
    den = dm * dp * (dm + dp)
    c1m = -dp**2 / den
    c1p = dm**2 / den
    c1c = (dp**2 - dm**2) / den
    lo = c2m + b * c1m
    di = c2c + b * c1c - lam / r[1:-1] ** 2
    up = c2p + b * c1p
    f = np.asarray(rhs(r[1:-1]) if callable(rhs) else rhs, dtype=float).copy()
    if f.shape != (m - 2,):
        f = np.broadcast_to(f, (m - 2,)).copy()
    f[0] -= lo[0] * left
    f[-1] -= up[-1] * right
    ab = np.zeros((3, m - 2))
    ab[0, 1:] = up[:-1]
    ab[1] = di
    ab[2, :-1] = lo[1:]
    try:
        inner = solve_banded((1, 1), ab, f)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"radial BVP solve failed: {exc}") from exc
    if not np.all(np.isfinite(inner)):
        raise SolverError("radial BVP produced non-finite values")
    return np.concatenate([[left], inner, [right]])


@dataclass
class HomogeneousSolution:
    """h with h(0) = 0, h(1) = 1 sampled on a radial grid.

    On (0, r0) h is exactly C1 r^k; ``a_cut`` is the final cutoff of the approximating
    sequence h_a(a) = a^k and ``history`` records (a_cut, C1) per halving.
    """

    h: RadialFunction
    dh: RadialFunction
    k: int
    C1: float | None
    a_cut: float
    history: list = field(default_factory=list)
    bounds_ok: bool = True

    @classmethod
    def constant(cls, grid: RadialGrid) -> "HomogeneousSolution":
        """h = 1, the zero-mode substitute."""
        one = np.ones(grid.size)
        return cls(RadialFunction.on(grid, one), RadialFunction.on(grid, 0 * one), 0, None, 0.0)

    def max_difference_quotient(self) -> float:
        r, v = self.h.nodes, self.h.values
        return float(np.max(np.abs(np.diff(v) / np.diff(r))))


def _inner_nodes(a_cut, stop, per_octave=24):
    m = max(int(math.ceil(per_octave * math.log2(stop / a_cut))), 2)
    return np.geomspace(a_cut, stop, m + 1)[:-1]


def solve_homogeneous(
    cfg: ProblemConfig,
    grid: RadialGrid,
    a_cut: float | None = None,
    tol: float = 1e-6,
    max_halvings: int = 60,
) -> HomogeneousSolution:
    """Homogeneous solution of V'' + bV' - lam V/r^2 = 0 with h(0) = 0, h(1) = 1.

    Solves h_a on (a_cut, 1) with h_a(a_cut) = a_cut^k and halves a_cut until the
    monitored constant (C1 = h(r0)/r0^k, or h at the grid midpoint when r0 = 0)
    changes by less than ``tol`` relative.  The returned h is the limit profile:
    C1 r^k on the flat zone and the converged h_a elsewhere.
    """
    k = cfg.mode_k
    if k < 1:
        raise ValueError("solve_homogeneous needs k >= 1; use HomogeneousSolution.constant")
    r0 = cfg.r0
    if a_cut is None:
        a_cut = r0 / 16 if r0 > 0 else 5e-4
    if r0 > 0 and not 0 < a_cut < r0:
        raise DomainError("a_cut must lie in (0, r0)")
    if r0 == 0 and not 0 < a_cut < 1e-3:
        raise DomainError("a_cut must lie in (0, 1e-3) for the convex case")

    start = r0 / 2 if r0 > 0 else 2e-3
    outer = grid.nodes[grid.nodes >= start]
    probe = r0 if r0 > 0 else float(outer[outer.size // 2])
    ip = int(np.argmin(np.abs(outer - probe)))

    history = []
    prev = None
    ha = None
    for _ in range(max_halvings):
        nodes = np.concatenate([_inner_nodes(a_cut, outer[0]), outer])
        vals = solve_radial_bvp(cfg, nodes, 0.0, a_cut**k, 1.0)
        ha = vals[-outer.size:]
        c = ha[ip] / probe**k
        history.append((a_cut, c))
        if prev is not None and abs(c - prev) < tol * max(1.0, abs(c)):
            break
        prev = c
        a_cut /= 2
    else:
        raise SolverError("cutoff halving did not converge")

    r = grid.nodes
    h = np.empty_like(r)
    h[r >= start] = ha
    inner = r < start
    if r0 > 0:
        C1 = float(history[-1][1])
        h[inner] = C1 * r[inner] ** k
        # flat zone is exactly C1 r^k in the limit a -> 0
        flat = (r >= start) & (r <= r0)
        h[flat] = C1 * r[flat] ** k
    else:
        C1 = None
        h[inner] = ha[0] * (r[inner] / outer[0]) ** k
    hf = RadialFunction.on(grid, h)
    # derivative: exact on the flat zone, spline elsewhere
    dh = hf.derivative(r)
    if r0 > 0:
        m = r <= r0
        dh[m] = C1 * k * r[m] ** (k - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = r > 0
        ok = bool(np.all(h[pos] >= r[pos] ** k - 1e-8) and np.all(h <= 1.0 + 1e-8))
    return HomogeneousSolution(
        h=hf, dh=RadialFunction.on(grid, dh), k=k, C1=C1, a_cut=a_cut,
        history=history, bounds_ok=ok,
    )


# --------------------------------------------------------------------------- reduction of order


def reduce_order_vprime(
    cfg: ProblemConfig,
    h: HomogeneousSolution | None,
    A: RadialFunction,
    B: RadialFunction,
    vprime_anchor: float,
    v_anchor: float = 0.0,
) -> RadialFunction:
    """Recover V' on [r0/2, 1] from the source split H = A' + B.

    With V = h w the first-order equation for w' has integrating factor
    mu = (h/h(r0/2))^2 exp(int b).  The A' term is integrated by parts so only A
    itself is sampled.  ``h=None`` means h = 1 (zero mode).
    """
    s0 = _base_point(cfg)
    nodes = A.nodes
    if nodes[0] > s0 + 1e-14 or nodes[-1] < 1.0 - 1e-9:
        raise DomainError("A must be sampled on a grid covering [r0/2, 1)")
    grid = RadialGrid(nodes[nodes >= s0 - 1e-14], tuple(b for b in A.breaks if b > s0))
    r = grid.nodes

    if h is None:
        hv = lambda t: np.ones_like(np.asarray(t, dtype=float))  # noqa: E731
        dhv = lambda t: np.zeros_like(np.asarray(t, dtype=float))  # noqa: E731
    else:
        hv, dhv = h.h, h.dh

    h0 = float(hv(np.array([s0]))[0])
    if h0 <= 0.0:
        raise DomainError("h vanishes at r0/2; reduction of order needs r0 > 0 for k >= 1")

    def mu(t):
        return np.exp(log_integrating_factor(cfg, t)) * (hv(t) / h0) ** 2

    t, wts = _gauss(r)
    ht, dht = hv(t), dhv(t)
    At, Bt = A(t), B(t)
    bt = drift(cfg, t)
    mut = mu(t)
    integrand = mut * (Bt / ht - At * (dht / ht**2 + bt / ht))
    J = np.concatenate([[0.0], np.cumsum(np.sum(wts * integrand, axis=1))])
    hr = hv(r)
    mur = mu(r)
    Ar = A(r)
    J += mur * Ar / hr - float(A(np.array([s0]))[0]) / h0  # boundary terms, mu(s0) = 1

    dh0 = float(dhv(np.array([s0]))[0])
    w0 = v_anchor / h0
    dw0 = vprime_anchor / h0 - dh0 * v_anchor / h0**2
    dw = (dw0 + J) / mur
    w = w0 + RadialFunction.on(grid, dw).cumulative_integral()
    vp = dhv(r) * w + hr * dw
    return RadialFunction.on(grid, vp)


# --------------------------------------------------------------------------- bootstrap


def bootstrap_schedule(gamma: float, s0: float = 0.5) -> list:
    """Exponents s0, (s0 - gamma/2)_+, ... ending at the first zero."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must be in (0, 1)")
    out = [float(s0)]
    j = 0
    while out[-1] > 0.0:
        j += 1
        s = s0 - j * gamma / 2
        out.append(round(s, 14) if s > 1e-12 else 0.0)
    return out
