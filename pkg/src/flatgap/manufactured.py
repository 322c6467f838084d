"""Manufactured solutions for the mode PDE and the radial two-point problem.

The mode check uses W*(r, t) = r^k cos(r) (1 + t/2 + t^2/4) in the flattened chart;
the source and the wall fluxes are derived by hand from the divergence form so that
W* is exact.  The radial check uses V*(r) = r^k cos(r) for h'' + b h' - lam h/r^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ProblemConfig, Profile
from .neck_solver import BoundaryData, assemble_and_solve_mode, build_grid
from .reduced_ode import drift, radial_grid, solve_radial_bvp

__all__ = ["ConvergenceStudy", "mode_exact", "mode_source", "mode_mms", "radial_mms"]


@dataclass
class ConvergenceStudy:
    levels: list
    errors: list
    sizes: list

    @property
    def ratios(self) -> list:
        e = self.errors
        return [e[i] / e[i + 1] for i in range(len(e) - 1)]


def _radial(k, r):
    c, s = np.cos(r), np.sin(r)
    R = r**k * c
    if k == 0:
        return R, -s, -c
    R1 = k * r ** (k - 1) * c - r**k * s
    R2 = (k * (k - 1) * r ** (k - 2) if k > 1 else 0.0) * c - 2 * k * r ** (k - 1) * s - r**k * c
    return R, R1, R2


def mode_exact(k: int, r, t):
    """W* and its derivatives (W, W_r, W_t, W_rr, W_rt, W_tt)."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    R, R1, R2 = _radial(k, r)
    T = 1 + t / 2 + t**2 / 4
    T1 = 0.5 + t / 2
    return R * T, R1 * T, R * T1, R2 * T, R1 * T1, R * np.full_like(T, 0.5)


def _coefficient_parts(profile: Profile, eps: float, r, t):
    g = eps + profile.h1(r) - profile.h2(r)
    dd = profile.dh1(r) - profile.dh2(r)
    d2 = profile.d2h1(r) - profile.d2h2(r)
    at = -2 * profile.dh2(r) - (t + 1) * dd
    at_r = -2 * profile.d2h2(r) - (t + 1) * d2
    at_t = -dd + 0 * t
    bt = (4 + at**2) / g
    bt_t = 2 * at * at_t / g
    return g, dd, at, at_r, at_t, bt, bt_t


def mode_source(cfg: ProblemConfig, profile: Profile):
    """(source, wall_flux) making W* exact for the weak form of the mode equation."""
    k, n, eps, lam = cfg.mode_k, cfg.n, cfg.epsilon, cfg.eigenvalue

    def flux_t(r, t):
        W, Wr, Wt, *_ = mode_exact(k, r, t)
        _, _, at, _, _, bt, _ = _coefficient_parts(profile, eps, r, t)
        return at * Wr + bt * Wt

    def source(r, t):
        W, Wr, Wt, Wrr, Wrt, Wtt = mode_exact(k, r, t)
        g, g_r, at, at_r, at_t, bt, bt_t = _coefficient_parts(profile, eps, r, t)
        X = g * Wr + at * Wt
        X_r = g_r * Wr + g * Wrr + at_r * Wt + at * Wrt
        Y_t = at_t * Wr + at * Wrt + bt_t * Wt + bt * Wtt
        return -((n - 2) / r * X + X_r + Y_t) + lam * g * W / r**2

    wall_flux = (lambda r: -flux_t(r, -1.0), lambda r: flux_t(r, 1.0))
    return source, wall_flux


def _exact_bc(cfg: ProblemConfig, profile: Profile) -> BoundaryData:
    eps = cfg.epsilon

    def wall(r, xn):
        r = np.asarray(r, dtype=float)
        g = eps + profile.h1(r) - profile.h2(r)
        t = 2 * (np.asarray(xn) - profile.h2(r) + eps / 2) / g - 1
        return mode_exact(cfg.mode_k, r, t)[0]

    return BoundaryData.for_mode(cfg.mode_k, wall)


def mode_mms(
    cfg: ProblemConfig,
    profile: Profile | None = None,
    levels=(0, 1, 2),
    nt: int = 17,
    h_max: float = 0.05,
) -> ConvergenceStudy:
    """Max nodal error of the mode solve against W* on successively halved grids."""
    profile = Profile.from_config(cfg) if profile is None else profile
    source, flux = mode_source(cfg, profile)
    bc = _exact_bc(cfg, profile)
    errors, sizes = [], []
    for lvl in levels:
        grid = build_grid(cfg, profile, nt=nt, refine=lvl, h_max=h_max)
        f = assemble_and_solve_mode(cfg, profile, grid, bc, source=source, wall_flux=flux)
        exact = mode_exact(cfg.mode_k, grid.r[:, None], grid.t[None, :])[0]
        errors.append(float(np.max(np.abs(f.values - exact))))
        sizes.append(grid.size)
    return ConvergenceStudy(list(levels), errors, sizes)


def radial_mms(cfg: ProblemConfig, levels=(0, 1, 2), h_max: float = 0.05) -> ConvergenceStudy:
    """Max nodal error of :func:`solve_radial_bvp` against V* = r^k cos r."""
    k, lam = cfg.mode_k, cfg.eigenvalue
    lo = cfg.r0 / 2 if cfg.r0 > 0 else 0.05
    base = radial_grid(cfg.r0, cfg.epsilon, h_max=h_max)
    errors, sizes = [], []
    for lvl in levels:
        r = base.refined(lvl).nodes if lvl else base.nodes
        r = r[r >= lo - 1e-14]
        V, V1, V2 = _radial(k, r)
        rhs = V2[1:-1] + drift(cfg, r[1:-1]) * V1[1:-1] - lam * V[1:-1] / r[1:-1] ** 2
        num = solve_radial_bvp(cfg, r, rhs, V[0], V[-1])
        errors.append(float(np.max(np.abs(num - V))))
        sizes.append(r.size)
    return ConvergenceStudy(list(levels), errors, sizes)
