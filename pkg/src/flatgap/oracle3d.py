"""Coarse three-dimensional check that single-mode data give single-mode solutions.

A 7-point Laplacian on a uniform n = 3 voxel grid covering the neck |x'| < 1.  Voxels
inside the inclusions are dropped (staircase Neumann walls: their links carry no flux)
and lateral neighbours with |x'| >= 1 carry Dirichlet data phi.  The solution is then
sampled on horizontal circles and projected onto circle harmonics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .geometry import Profile
from .harmonics import ModeIndex, circle_nodes, modes_upto, project, SphereSamples

__all__ = ["VoxelSolution", "solve_voxel", "mode_energy_fraction"]


@dataclass
class VoxelSolution:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    u: np.ndarray          # (nx, ny, nz), extended into the inclusions
    inside: np.ndarray
    epsilon: float
    profile: Profile


def solve_voxel(profile: Profile, epsilon: float, phi, m: int = 33) -> VoxelSolution:
    """Solve the insulated problem in the neck on an m^3 voxel grid.

    ``phi(x, y, z)`` supplies the lateral Dirichlet data.
    """
    x = np.linspace(-1.0, 1.0, m)
    y = np.linspace(-1.0, 1.0, m)
    ztop = epsilon / 2 + float(profile.h1(1.0))
    zbot = -epsilon / 2 + float(profile.h2(1.0))
    z = np.linspace(zbot, ztop, m)
    hx, hz = x[1] - x[0], z[1] - z[0]
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    rho = np.hypot(X, Y)
    rc = np.minimum(rho, 1.0)
    inside = (rho < 1.0) & (Z >= -epsilon / 2 + profile.h2(rc)) & (Z <= epsilon / 2 + profile.h1(rc))

    n_in = int(inside.sum())
    num = -np.ones(inside.shape, dtype=int)
    num[inside] = np.arange(n_in)
    rows, cols, vals = [], [], []
    rhs = np.zeros(n_in)
    diag = np.zeros(n_in)
    ii = np.argwhere(inside)
    for axis, h in ((0, hx), (1, hx), (2, hz)):
        w = 1.0 / h**2
        for step in (-1, 1):
            nb = ii.copy()
            nb[:, axis] += step
            ok = (nb[:, axis] >= 0) & (nb[:, axis] < m)
            me = num[tuple(ii.T)]
            nbc = np.clip(nb, 0, m - 1)
            nb_in = ok & inside[tuple(nbc.T)]
            # coupling to interior neighbours
            rows.append(me[nb_in])
            cols.append(num[tuple(nbc[nb_in].T)])
            vals.append(np.full(int(nb_in.sum()), -w))
            diag[me[nb_in]] += w
            # lateral Dirichlet neighbours
            if axis < 2:
                lat = ok & ~nb_in & (rho[tuple(nbc.T)] >= 1.0)
                p = nbc[lat]
                diag[me[lat]] += w
                np.add.at(rhs, me[lat], w * phi(X[tuple(p.T)], Y[tuple(p.T)], Z[tuple(p.T)]))
    rows.append(np.arange(n_in))
    cols.append(np.arange(n_in))
    vals.append(diag)
    A = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_in, n_in)
    )
    sol = spla.spsolve(A, rhs)

    u = np.zeros(inside.shape)
    u[inside] = sol
    # lateral exterior: data; inclusion voxels: copy the nearest gap value in z
    outside_lat = rho >= 1.0
    u[outside_lat] = phi(X[outside_lat], Y[outside_lat], Z[outside_lat])
    for i in range(m):
        for j in range(m):
            col = inside[i, j]
            if outside_lat[i, j, 0] or not col.any():
                continue
            k = np.flatnonzero(col)
            u[i, j, : k[0]] = u[i, j, k[0]]
            u[i, j, k[-1] + 1:] = u[i, j, k[-1]]
    return VoxelSolution(x, y, z, u, inside, epsilon, profile)


def mode_energy_fraction(
    sol: VoxelSolution,
    mode: ModeIndex = ModeIndex(1, 1),
    kmax: int = 8,
    radii=None,
    levels: int = 5,
    n_angles: int = 64,
):
    """Fraction of the projected energy that sits in ``mode``.

    Circles of radius rho at heights strictly inside the gap are projected on every
    mode of degree <= kmax; energies are summed over circles.  Returns
    ``(fraction, energies)`` with ``energies`` keyed by ModeIndex.
    """
    if radii is None:
        radii = np.linspace(0.1, 0.85, 16)
    interp = RegularGridInterpolator((sol.x, sol.y, sol.z), sol.u)
    theta, w = circle_nodes(n_angles)
    modes = modes_upto(kmax)
    energy = {md: 0.0 for md in modes}
    eps, p = sol.epsilon, sol.profile
    for rho in radii:
        lo = -eps / 2 + float(p.h2(rho))
        hi = eps / 2 + float(p.h1(rho))
        for zz in np.linspace(lo, hi, levels + 2)[1:-1]:
            pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), np.full_like(theta, zz)])
            samples = SphereSamples(theta, w, interp(pts))
            for md in modes:
                energy[md] += float(project(samples, md)) ** 2
    total = sum(energy.values())
    return energy[mode] / total if total > 0 else 0.0, energy
