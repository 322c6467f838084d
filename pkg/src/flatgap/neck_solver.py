"""Single-mode solves in the flattened neck.

For u = U(r, x_n) Y_{k,i}(xi) the flattened function v = W(r, y_n) Y solves, with
lam = k(k+n-3) and weight r^(n-2),

    d_r(r^(n-2) (g W_r + alpha W_n)) + d_n(r^(n-2) (alpha W_r + beta W_n)) = lam g r^(n-4) W

on (0, 1) x (-eps, eps).  The insulating walls become the natural (conormal) boundary
condition alpha W_r + beta W_n = 0 on y_n = +-eps.  The vertical coordinate is
rescaled to t = y_n / eps in [-1, 1] and the weak form is discretized with bilinear
elements on a tensor grid (2 x 2 Gauss quadrature per cell).  Dirichlet data are
imposed at r = 1; on the axis W = 0 for k >= 1 and the natural symmetry condition
for k = 0.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid

from .errors import ResolutionError, SolverError
from .geometry import ProblemConfig, Profile, radial_coefficients
from .harmonics import sphere_measure
from .reduced_ode import RadialFunction, RadialGrid, radial_grid

__all__ = [
    "Grid2D",
    "Field2D",
    "BoundaryData",
    "build_grid",
    "assemble",
    "load_vector",
    "assemble_and_solve_mode",
    "vertical_average",
    "flux_and_sources",
    "gradient_field",
    "boundary_fluxes",
    "physical_derivatives",
    "solve_mode_physical",
]

DIRECT_LIMIT = 100_000
_GP = 0.5 * (1.0 + np.array([-1.0, 1.0]) / np.sqrt(3.0))


@dataclass(frozen=True)
class Grid2D:
    """Tensor grid: radial nodes r (from 0 to 1) times vertical nodes t = y_n/eps."""

    r: np.ndarray
    t: np.ndarray
    epsilon: float
    profile: Profile
    breaks: tuple = ()

    @property
    def shape(self):
        return self.r.size, self.t.size

    @property
    def size(self) -> int:
        return self.r.size * self.t.size

    @property
    def radial(self) -> RadialGrid:
        return RadialGrid(self.r, self.breaks)

    @property
    def yn(self) -> np.ndarray:
        return self.epsilon * self.t

    def gap(self) -> np.ndarray:
        p = self.profile
        return self.epsilon + p.h1(self.r) - p.h2(self.r)

    def xn(self) -> np.ndarray:
        """Physical vertical coordinate of every node, shape (nr, nt)."""
        p = self.profile
        g = self.gap()[:, None]
        return (0.5 * self.t[None, :] + 0.5) * g + p.h2(self.r)[:, None] - self.epsilon / 2


def build_grid(
    cfg: ProblemConfig,
    profile: Profile,
    nt: int = 17,
    radial: RadialGrid | None = None,
    refine: int = 0,
    **grid_kw,
) -> Grid2D:
    """Grid2D graded about the profile kink (see :func:`radial_grid`) with ``nt`` vertical nodes."""
    if radial is None:
        radial = radial_grid(profile.r0, cfg.epsilon, **grid_kw)
    if refine:
        radial = radial.refined(refine)
        nt = (nt - 1) * 2**refine + 1
    if radial.nodes[0] != 0.0 or abs(radial.nodes[-1] - 1.0) > 1e-15:
        raise ValueError("radial nodes must run from 0 to 1")
    return Grid2D(radial.nodes, np.linspace(-1.0, 1.0, nt), cfg.epsilon, profile, radial.breaks)


@dataclass
class Field2D:
    """Nodal values (nr, nt) on a Grid2D in the flattened chart."""

    grid: Grid2D
    values: np.ndarray
    name: str = "v"
    cfg: ProblemConfig | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values must have shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data f(r, x_n) used at r = 1 and the axis condition at r = 0."""

    wall: Callable
    axis: str = "dirichlet"

    def __post_init__(self):
        if self.axis not in ("dirichlet", "symmetry"):
            raise ValueError("axis must be 'dirichlet' or 'symmetry'")

    @classmethod
    def for_mode(cls, k: int, wall: Callable) -> "BoundaryData":
        return cls(wall=wall, axis="symmetry" if k == 0 else "dirichlet")

    @classmethod
    def constant(cls, k: int, c: float) -> "BoundaryData":
        return cls.for_mode(k, lambda r, xn: np.full(np.shape(xn), float(c)))

    @classmethod
    def background_x1(cls, cfg: ProblemConfig) -> "BoundaryData":
        """Mode coefficient of phi = x_1: f = r sqrt(|S^{n-2}| / (n-1))."""
        c = np.sqrt(sphere_measure(cfg.n) / (cfg.n - 1))
        return cls.for_mode(1, lambda r, xn: c * np.asarray(r, dtype=float) + 0.0 * xn)

    @classmethod
    def zero_mode(cls, cfg: ProblemConfig, f: Callable | None = None) -> "BoundaryData":
        """Zero-mode data; default f corresponds to phi = x_n + |x'|^2."""
        c = np.sqrt(sphere_measure(cfg.n))
        if f is None:
            def f(r, xn):
                return c * (np.asarray(xn, dtype=float) + np.asarray(r, dtype=float) ** 2)
        return cls.for_mode(0, f)

    @classmethod
    def default(cls, cfg: ProblemConfig) -> "BoundaryData":
        """Data used by sweeps: x_1 for k = 1, the zero-mode default for k = 0 and the
        mode coefficient of r^k cos(k theta) (n = 3) or r^k (other n) for k >= 2."""
        k = cfg.mode_k
        if k == 0:
            return cls.zero_mode(cfg)
        if k == 1:
            return cls.background_x1(cfg)
        c = np.sqrt(np.pi) if cfg.n == 3 else 1.0
        return cls.for_mode(k, lambda r, xn: c * np.asarray(r, dtype=float) ** k + 0.0 * xn)

    def check_mode(self, k: int):
        want = "symmetry" if k == 0 else "dirichlet"
        if self.axis != want:
            raise ValueError(f"mode k={k} requires the '{want}' axis condition")


# --------------------------------------------------------------------------- assembly


def _cell_coefficients(grid: Grid2D, cfg: ProblemConfig):
    """Coefficients at the 2 x 2 Gauss points of every cell, shape (nr-1, nt-1, 2, 2)."""
    r, t = grid.r, grid.t
    dr, dt = np.diff(r), np.diff(t)
    rq = r[:-1, None] + dr[:, None] * _GP[None, :]          # (nr-1, 2)
    tq = t[:-1, None] + dt[:, None] * _GP[None, :]          # (nt-1, 2)
    R = rq[:, None, :, None]
    T = tq[None, :, None, :]
    eps = grid.epsilon
    g, alpha, _ = radial_coefficients(grid.profile, eps, R, eps * T)
    g = np.broadcast_to(g, alpha.shape)
    at = alpha / eps
    bt = (4.0 + at**2) / g
    w = R ** (cfg.n - 2)
    lam = cfg.eigenvalue
    c0 = lam * g * w / R**2 if lam else np.zeros_like(at)
    return w * g, w * at, w * bt, c0


def assemble(grid: Grid2D, cfg: ProblemConfig) -> sp.csr_matrix:
    """Global stiffness matrix of the weak form (all nodes, no boundary conditions)."""
    nr, nt = grid.shape
    dr, dt = np.diff(grid.r), np.diff(grid.t)
    crr, crt, ctt, c0 = _cell_coefficients(grid, cfg)

    # bilinear shape functions at the Gauss points; local nodes (0,0),(1,0),(0,1),(1,1)
    xi, eta = _GP[:, None], _GP[None, :]
    one = np.ones((2, 2))
    N = np.stack([(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta])
    Nx = np.stack([-(1 - eta) * one, (1 - eta) * one, -eta * one, eta * one])
    Ny = np.stack([-(1 - xi) * one, -xi * one, (1 - xi) * one, xi * one])

    area = 0.25 * dr[:, None] * dt[None, :]
    hr = (1.0 / dr)[:, None, None, None]
    ht = (1.0 / dt)[None, :, None, None]

    def q(c, P, Q):
        return np.einsum("ijpq,apq,bpq->ijab", c, P, Q)

    Ke = (
        q(crr, Nx, Nx) * hr**2
        + (q(crt, Nx, Ny) + q(crt, Ny, Nx)) * hr * ht
        + q(ctt, Ny, Ny) * ht**2
        + q(c0, N, N)
    ) * area[..., None, None]

    I, J = np.meshgrid(np.arange(nr - 1), np.arange(nt - 1), indexing="ij")
    base = I * nt + J
    loc = np.stack([base, base + nt, base + 1, base + nt + 1], axis=-1)  # (nr-1, nt-1, 4)
    rows = np.broadcast_to(loc[..., :, None], Ke.shape).ravel()
    cols = np.broadcast_to(loc[..., None, :], Ke.shape).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(nr * nt, nr * nt)).tocsr()
    K.sum_duplicates()
    return K


def load_vector(grid: Grid2D, cfg: ProblemConfig, source=None, wall_flux=None) -> np.ndarray:
    """Right-hand side of the weak form for a volume source and wall fluxes.

    ``source(r, t)`` is S in  -div(r^(n-2) K grad W) + lam r^(n-4) g W = r^(n-2) S  and
    ``wall_flux = (q_bot, q_top)`` gives the outward conormal fluxes q(r) on t = -1, +1
    (the weight r^(n-2) is applied here).  Both use Gauss quadrature.
    """
    nr, nt = grid.shape
    b = np.zeros((nr, nt))
    dr, dt = np.diff(grid.r), np.diff(grid.t)
    rq = grid.r[:-1, None] + dr[:, None] * _GP[None, :]       # (nr-1, 2)
    w = rq ** (cfg.n - 2)
    Nr = np.stack([1 - _GP, _GP])                              # (2 local, 2 gauss)
    if source is not None:
        tq = grid.t[:-1, None] + dt[:, None] * _GP[None, :]
        S = source(rq[:, None, :, None], tq[None, :, None, :]) * w[:, None, :, None]
        S = np.broadcast_to(S, (nr - 1, nt - 1, 2, 2))
        area = 0.25 * dr[:, None] * dt[None, :]
        # local (a, b) is node (i + a, j + b)
        loc = np.einsum("ijpq,ap,bq->ijab", S, Nr, Nr) * area[..., None, None]
        b[:-1, :-1] += loc[..., 0, 0]
        b[1:, :-1] += loc[..., 1, 0]
        b[:-1, 1:] += loc[..., 0, 1]
        b[1:, 1:] += loc[..., 1, 1]
    if wall_flux is not None:
        for col, q in zip((0, -1), wall_flux):
            if q is None:
                continue
            val = np.asarray(q(rq), dtype=float) * w * 0.5 * dr[:, None]
            e = np.einsum("ip,ap->ia", val, Nr)
            b[:-1, col] += e[:, 0]
            b[1:, col] += e[:, 1]
    return b.ravel()


def _dirichlet_nodes(grid: Grid2D, bc: BoundaryData):
    nr, nt = grid.shape
    idx = np.arange(nr * nt).reshape(nr, nt)
    mask = np.zeros((nr, nt), dtype=bool)
    vals = np.zeros((nr, nt))
    mask[-1, :] = True
    vals[-1, :] = np.asarray(bc.wall(np.ones(nt), grid.xn()[-1, :]), dtype=float)
    if bc.axis == "dirichlet":
        mask[0, :] = True
        vals[0, :] = 0.0
    return idx, mask, vals


def _line_preconditioner(Kff, nt_free_cols):
    """Block (vertical line) Jacobi preconditioner for the strongly anisotropic operator."""
    Kc = Kff.tocoo()
    same = (Kc.row // nt_free_cols) == (Kc.col // nt_free_cols)
    M = sp.csc_matrix((Kc.data[same], (Kc.row[same], Kc.col[same])), shape=Kff.shape)
    lu = spla.splu(M)
    return spla.LinearOperator(Kff.shape, matvec=lu.solve)


def assemble_and_solve_mode(
    cfg: ProblemConfig,
    profile: Profile,
    grid: Grid2D,
    bc: BoundaryData,
    rtol: float = 1e-10,
    source=None,
    wall_flux=None,
) -> Field2D:
    """Solve the single-mode problem; returns W(r, t) in the flattened chart.

    ``source`` and ``wall_flux`` (see :func:`load_vector`) default to zero, which is
    the insulated problem; they exist for manufactured-solution checks.
    """
    start = time.perf_counter()
    nr, nt = grid.shape
    if nt < 16:
        raise ResolutionError(f"gap resolved by {nt} vertical nodes; need >= 16")
    bc.check_mode(cfg.mode_k)

    K = assemble(grid, cfg)
    idx, mask, vals = _dirichlet_nodes(grid, bc)
    d = idx[mask]
    f = idx[~mask]
    ud = vals[mask]
    Kff = K[f][:, f].tocsc()
    rhs = -(K[f][:, d] @ ud)
    if source is not None or wall_flux is not None:
        rhs = rhs + load_vector(grid, cfg, source, wall_flux)[f]
    u = np.zeros(nr * nt)
    u[d] = ud
    if not np.any(rhs):
        uf = np.zeros(f.size)
        method = "trivial"
    elif f.size <= DIRECT_LIMIT:
        method = "splu"
        with warnings.catch_warnings():
            warnings.simplefilter("error", sp.linalg.MatrixRankWarning)
            try:
                uf = spla.splu(Kff).solve(rhs)
            except (RuntimeError, sp.linalg.MatrixRankWarning) as exc:
                est = spla.onenormest(Kff)
                raise SolverError(f"sparse factorization failed (||K||_1 ~ {est:.3e}): {exc}") from exc
    else:
        method = "pcg"
        # free nodes keep whole vertical lines, so line blocks are contiguous runs of nt
        M = _line_preconditioner(Kff, nt)
        uf, info = spla.cg(Kff, rhs, M=M, rtol=rtol * 1e-2, maxiter=20000)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
    u[f] = uf
    res = Kff @ uf - rhs
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    rel = float(np.linalg.norm(res) / scale) if np.any(rhs) else 0.0
    if not np.all(np.isfinite(u)):
        raise SolverError("solution contains non-finite values")
    if rel > rtol:
        raise SolverError(f"relative residual {rel:.3e} exceeds {rtol:.1e}")
    W = u.reshape(nr, nt)
    diag = {
        "residual": rel,
        "unknowns": int(f.size),
        "method": method,
        "wall_ms": 1e3 * (time.perf_counter() - start),
    }
    return Field2D(grid, W, name=f"U_{cfg.mode_k},{cfg.mode_i}", cfg=cfg, diagnostics=diag)


def boundary_fluxes(field: Field2D) -> dict:
    """Discrete reactions on the Dirichlet boundaries and the zeroth-order absorption.

    For the conservative assembly ``wall + axis = absorption`` holds to round-off.
    """
    cfg, grid = field.cfg, field.grid
    K = assemble(grid, cfg)
    Ku = (K @ field.values.ravel()).reshape(grid.shape)
    wall = float(Ku[-1].sum())
    axis = float(Ku[0].sum()) if cfg.mode_k >= 1 else 0.0
    # absorption: 1^T K u restricted to the zeroth-order term equals the total
    absorption = float(Ku.sum())
    interior = float(np.abs(Ku[1:-1]).sum() + (0.0 if cfg.mode_k >= 1 else abs(Ku[0]).sum()))
    return {"wall": wall, "axis": axis, "absorption": absorption, "interior": interior}


# --------------------------------------------------------------------------- post-processing


def vertical_average(field: Field2D) -> RadialFunction:
    """Trapezoidal mean of the field over t in [-1, 1] at every radial node."""
    t = field.grid.t
    V = trapezoid(field.values, t, axis=1) / (t[-1] - t[0])
    return RadialFunction.on(field.grid.radial, V)


def _dt(field: Field2D):
    return np.gradient(field.values, field.grid.t, axis=1, edge_order=2)


def _dr(field: Field2D):
    return np.gradient(field.values, field.grid.r, axis=0, edge_order=2)


def flux_and_sources(cfg: ProblemConfig, profile: Profile, field: Field2D):
    """Radial flux F and the source split A, B of the averaged radial equation.

    F = mean_t(alpha W_n) + e V'.  With G = eps + a(r-r0)_+^2 the averaged equation
    reads V'' + b V' - lam V / r^2 = A' + B where

        A = -F / G,
        B = -(2a(r-r0)_+ F / G^2 + (n-2) F / (r G) - lam e V / (r^2 G)).
    """
    grid = field.grid
    r, t = grid.r, grid.t
    eps = grid.epsilon
    _, alpha, _ = radial_coefficients(profile, eps, r[:, None], eps * t[None, :])
    Wt = _dt(field)
    Vf = vertical_average(field)
    V = Vf.values
    Vp = np.gradient(V, r, edge_order=2)
    e = profile.correction(r)
    # alpha W_n = (alpha / eps) W_t
    F = trapezoid(alpha / eps * Wt, t, axis=1) / 2.0 + e * Vp
    d = np.maximum(r - cfg.r0, 0.0)
    G = cfg.epsilon + cfg.a * d**2
    lam = cfg.eigenvalue
    A = -F / G
    with np.errstate(divide="ignore", invalid="ignore"):
        B = -(2 * cfg.a * d * F / G**2 + (cfg.n - 2) * F / (r * G) - lam * e * V / (r**2 * G))
    B[r == 0] = 0.0
    rg = grid.radial
    return RadialFunction.on(rg, F), RadialFunction.on(rg, A), RadialFunction.on(rg, B)


def physical_derivatives(field: Field2D):
    """(U_r, U_n) in physical coordinates at every node."""
    grid = field.grid
    eps = grid.epsilon
    _, alpha, _ = radial_coefficients(grid.profile, eps, grid.r[:, None], eps * grid.t[None, :])
    g = grid.gap()[:, None]
    Wr, Wt = _dr(field), _dt(field)
    Ur = Wr + (alpha / eps) / g * Wt
    Un = 2.0 * Wt / g
    return Ur, Un


def gradient_field(cfg: ProblemConfig, profile: Profile, field: Field2D) -> Field2D:
    """Envelope |Du| = sqrt(U_r^2 + U_n^2 + (k U / r)^2) of the mode in physical coordinates.

    This bounds sup over the sphere of |D(U Y)| / max|Y| for the n = 3 cosine harmonic;
    on the axis k U / r is replaced by its limit k U_r.
    """
    Ur, Un = physical_derivatives(field)
    k = cfg.mode_k
    r = field.grid.r[:, None]
    W = field.values
    ang = np.zeros_like(W)
    if k:
        with np.errstate(divide="ignore", invalid="ignore"):
            ang = np.where(r > 0, k * W / np.where(r > 0, r, 1.0), k * _dr(field))
    mag = np.sqrt(Ur**2 + Un**2 + ang**2)
    return Field2D(field.grid, mag, name="|Du|", cfg=cfg)


# --------------------------------------------------------------------------- oracle path


def _diff_matrices(x):
    """Second-order first/second derivative matrices on nonuniform nodes (one-sided at ends)."""
    m = x.size
    D1 = sp.lil_matrix((m, m))
    D2 = sp.lil_matrix((m, m))
    for i in range(m):
        if i == 0:
            sten = [0, 1, 2]
        elif i == m - 1:
            sten = [m - 3, m - 2, m - 1]
        else:
            sten = [i - 1, i, i + 1]
        xs = x[sten] - x[i]
        # weights from the 3 x 3 Vandermonde system
        V = np.vstack([np.ones(3), xs, xs**2])
        w1 = np.linalg.solve(V, [0.0, 1.0, 0.0])
        w2 = np.linalg.solve(V, [0.0, 0.0, 2.0])
        for c, a1, a2 in zip(sten, w1, w2):
            D1[i, c] = a1
            D2[i, c] = a2
    return D1.tocsr(), D2.tocsr()


def solve_mode_physical(
    cfg: ProblemConfig, profile: Profile, grid: Grid2D, bc: BoundaryData
) -> Field2D:
    """Independent strong-form solve of the mode equation in physical coordinates.

    U_rr + U_nn + (n-2)/r U_r - lam U / r^2 = 0 is discretized by finite differences on
    the same boundary-fitted nodes, writing U(r, x_n) = W(r, t(r, x_n)); the insulating
    walls use U_n - h' U_r = 0 with one-sided stencils.  Returns W on the grid.
    """
    nr, nt = grid.shape
    bc.check_mode(cfg.mode_k)
    r, t, eps = grid.r, grid.t, grid.epsilon
    p = profile
    g = grid.gap()
    dg = p.dh1(r) - p.dh2(r)
    d2g = p.d2h1(r) - p.d2h2(r)
    R = r[:, None]
    T = t[None, :]
    G, DG, D2G = g[:, None], dg[:, None], d2g[:, None]
    s = 0.5 * (T + 1.0) * G                       # x_n - h2 + eps/2
    sr = -p.dh2(r)[:, None] + 0 * T
    srr = -p.d2h2(r)[:, None] + 0 * T
    tr = 2 * sr / G - 2 * s * DG / G**2
    trr = 2 * srr / G - 4 * sr * DG / G**2 - 2 * s * D2G / G**2 + 4 * s * DG**2 / G**3
    tx = 2.0 / G + 0 * T

    D1r, D2r = _diff_matrices(r)
    D1t, D2t = _diff_matrices(t)
    Ir, It = sp.identity(nr), sp.identity(nt)
    Wr = sp.kron(D1r, It)
    Wrr = sp.kron(D2r, It)
    Wt = sp.kron(Ir, D1t)
    Wtt = sp.kron(Ir, D2t)
    Wrt = sp.kron(D1r, D1t)

    def diag(a):
        return sp.diags(np.ravel(a))

    lam = cfg.eigenvalue
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_r = np.where(R > 0, 1.0 / np.where(R > 0, R, 1.0), 0.0) + 0 * T
    Ur = Wr + diag(tr) @ Wt
    L = (
        Wrr + diag(2 * tr) @ Wrt + diag(tr**2 + tx**2) @ Wtt + diag(trr) @ Wt
        + diag((cfg.n - 2) * inv_r) @ Ur
        - diag(lam * inv_r**2)
    )
    # insulating walls: U_n - h' U_r = 0 (upper uses h1', lower h2')
    top = diag(tx) @ Wt - diag(p.dh1(r)[:, None] + 0 * T) @ Ur
    bot = diag(tx) @ Wt - diag(p.dh2(r)[:, None] + 0 * T) @ Ur

    idx = np.arange(nr * nt).reshape(nr, nt)
    A = L.tolil()
    rhs = np.zeros(nr * nt)
    rows_top, rows_bot = idx[:, -1], idx[:, 0]
    A[rows_top] = top.tolil()[rows_top]
    A[rows_bot] = bot.tolil()[rows_bot]
    # axis
    if bc.axis == "dirichlet":
        A[idx[0]] = sp.identity(nr * nt, format="lil")[idx[0]]
    else:
        A[idx[0]] = Wr.tolil()[idx[0]]
    wall = idx[-1]
    A[wall] = sp.identity(nr * nt, format="lil")[wall]
    rhs[wall] = bc.wall(np.ones(nt), grid.xn()[-1, :])
    u = spla.spsolve(A.tocsc(), rhs)
    if not np.all(np.isfinite(u)):
        raise SolverError("physical-coordinate solve failed")
    return Field2D(grid, u.reshape(nr, nt), name=f"U_{cfg.mode_k},{cfg.mode_i} (physical)", cfg=cfg)
