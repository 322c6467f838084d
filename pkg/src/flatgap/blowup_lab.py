"""Gradient sweeps over the gap width and power-law fits of the blow-up rate."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import FitError, SolverError
from .geometry import ProblemConfig, Profile
from .neck_solver import (
    BoundaryData,
    Field2D,
    assemble_and_solve_mode,
    build_grid,
    gradient_field,
    physical_derivatives,
)

log = logging.getLogger(__name__)

__all__ = [
    "SweepRecord",
    "FitResult",
    "SweepError",
    "sup_gradient",
    "default_probes",
    "oscillation_ratio",
    "solve_one",
    "sweep",
    "fit_exponent",
    "spread",
    "derivative_bounds",
]

SUP_RADIUS = 0.75
OSC_FLOOR = 1e-14


@dataclass
class SweepRecord:
    epsilon: float
    sup_grad: float
    r_star: float
    xn_star: float
    osc_ratio: float
    residual: float
    unknowns: int
    wall_ms: float
    ok: bool = True
    error: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FitResult:
    exponent: float
    intercept: float
    r_squared: float
    residuals: list = field(default_factory=list)
    n_points: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


class SweepError(SolverError):
    """A solve failed mid-sweep; ``records`` holds the completed and the failed record."""

    def __init__(self, message: str, records: list):
        super().__init__(message)
        self.records = records


def _transition(cfg: ProblemConfig, r):
    d = np.maximum(np.asarray(r, dtype=float) - cfg.r0, 0.0)
    return cfg.epsilon + cfg.a * d**2


def sup_gradient(grad: Field2D, r_max: float = SUP_RADIUS):
    """Max of a gradient field over nodes with r <= r_max and its (r, x_n) location."""
    grid = grad.grid
    m = grid.r <= r_max + 1e-14
    sub = grad.values[m]
    i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
    xn = grid.xn()[m]
    return float(sub[i, j]), (float(grid.r[m][i]), float(xn[i, j]))


def default_probes(
    cfg: ProblemConfig, n_curved: int = 32, n_flat: int = 8, jitter: float = 0.0, seed: int = 0
) -> np.ndarray:
    """Midline probe radii: log-spaced in (r - r0)_+ from sqrt(eps) to 1/2, plus flat-zone points.

    ``jitter`` > 0 moves every probe by a seeded uniform factor in [1 - jitter, 1 + jitter]
    of its offset (from r0 in the curved zone, from 0 in the flat zone).
    """
    rng = np.random.default_rng(seed)

    def shake(x):
        return x * (1 + jitter * rng.uniform(-1, 1, x.size)) if jitter else x

    d = np.geomspace(math.sqrt(cfg.epsilon), 0.5, n_curved)
    probes = [cfg.r0 + shake(d)]
    if cfg.r0 > 0 and n_flat:
        probes.append(shake(cfg.r0 * (np.arange(n_flat) + 0.5) / n_flat))
    return np.sort(np.concatenate(probes))


def _field_sampler(field: Field2D):
    grid = field.grid
    interp = RegularGridInterpolator((grid.r, grid.t), field.values)
    return interp


def oscillation_ratio(
    field: Field2D,
    cfg: ProblemConfig,
    probes=None,
    n_disk: int = 24,
    rel_floor: float = 1e-9,
) -> float:
    """Max over midline probes of |Du(x)| sqrt(G(x)) / osc of u over the eta-cylinder at x.

    u is the physical mode function U(r, x_n) cos(k theta) (n >= 3) or its odd/even
    extension U(|x_1|) sign(x_1)^k (n = 2).  The cylinder has horizontal radius
    eta = sqrt(G)/4 and spans the full gap; it is sampled on a polar disk (or an
    interval for n = 2) at every vertical grid node.  For n >= 3 and k >= 1 each probe
    radius is tried at the angles 0, pi/(4k) and pi/(2k).  0/0 is reported as 0.
    Probes whose oscillation is below ``rel_floor * max|u|`` but above the absolute
    floor are round-off dominated and skipped with a warning.
    """
    probes = default_probes(cfg) if probes is None else np.asarray(probes, dtype=float)
    grid = field.grid
    t = grid.t
    k = cfg.mode_k
    Ur, Un = physical_derivatives(field)
    U = _field_sampler(field)
    j0 = int(np.argmin(np.abs(t)))
    dUr = _field_sampler(Field2D(grid, Ur))
    dUn = _field_sampler(Field2D(grid, Un))
    angles = [0.0] if (cfg.n == 2 or k == 0) else [0.0, np.pi / (4 * k), np.pi / (2 * k)]
    umax = float(np.max(np.abs(field.values)))
    best = 0.0
    for rp in probes:
        G = float(_transition(cfg, rp))
        eta = math.sqrt(G) / 4
        if rp + eta >= 1.0 or rp <= 0.0:
            log.warning("probe r=%.6g skipped: cylinder leaves the grid", rp)
            continue
        at = [[rp, t[j0]]]
        ur, un, uval = float(dUr(at)[0]), float(dUn(at)[0]), float(U(at)[0])
        for th in angles:
            if cfg.n == 2:
                x1 = rp + eta * np.linspace(-1.0, 1.0, 2 * n_disk + 1)
                x2 = np.zeros_like(x1)
                rr = np.abs(x1)
                ang = np.sign(x1) ** k
            else:
                rho = eta * np.sqrt(np.linspace(0.0, 1.0, n_disk // 2 + 1))
                phi = np.linspace(0.0, 2 * np.pi, n_disk, endpoint=False)
                P, F = np.meshgrid(rho, phi, indexing="ij")
                x1 = (rp * np.cos(th) + P * np.cos(F)).ravel()
                x2 = (rp * np.sin(th) + P * np.sin(F)).ravel()
                rr = np.hypot(x1, x2)
                ang = np.cos(k * np.arctan2(x2, x1))
            pts = np.stack(np.broadcast_arrays(rr[:, None], t[None, :]), axis=-1).reshape(-1, 2)
            vals = U(pts).reshape(rr.size, t.size) * ang[:, None]
            osc = float(vals.max() - vals.min())
            c, s_ = np.cos(k * th), np.sin(k * th)
            du = math.sqrt((ur * c) ** 2 + (un * c) ** 2 + (k * uval / rp * s_) ** 2)
            if osc < OSC_FLOOR and du < OSC_FLOOR:
                ratio = 0.0
            elif osc < rel_floor * umax:
                log.warning("probe r=%.6g skipped: oscillation %.3g at round-off level", rp, osc)
                continue
            else:
                ratio = du * math.sqrt(G) / osc
            best = max(best, ratio)
    return best


def solve_one(
    cfg: ProblemConfig,
    profile: Profile | None = None,
    bc: BoundaryData | None = None,
    nt: int = 17,
    refine: int = 0,
    grid_kw: dict | None = None,
    probes=True,
    jitter: float = 0.0,
    seed: int = 0,
):
    """Solve one mode problem and measure it.  Returns (record, field, gradient).

    ``probes`` is True (default probe set), False (skip the oscillation ratio) or an
    array of probe radii.
    """
    profile = Profile.from_config(cfg) if profile is None else profile
    bc = BoundaryData.default(cfg) if bc is None else bc
    grid = build_grid(cfg, profile, nt=nt, refine=refine, **(grid_kw or {}))
    field_ = assemble_and_solve_mode(cfg, profile, grid, bc)
    grad = gradient_field(cfg, profile, field_)
    sup, (rs, xs) = sup_gradient(grad)
    if probes is False:
        osc = float("nan")
    else:
        pr = default_probes(cfg, jitter=jitter, seed=seed) if probes is True else probes
        osc = oscillation_ratio(field_, cfg, probes=pr)
    d = field_.diagnostics
    rec = SweepRecord(
        epsilon=cfg.epsilon, sup_grad=sup, r_star=rs, xn_star=xs, osc_ratio=osc,
        residual=d["residual"], unknowns=d["unknowns"], wall_ms=d["wall_ms"],
    )
    return rec, field_, grad


def _sweep_item(args):
    cfg, kw = args
    try:
        rec, _, _ = solve_one(cfg, **kw)
        return rec
    except (SolverError, ValueError, ArithmeticError) as exc:
        nan = float("nan")
        return SweepRecord(cfg.epsilon, nan, nan, nan, nan, nan, 0, 0.0, ok=False, error=str(exc))


def check_epsilons(epsilons) -> list:
    eps = [float(e) for e in epsilons]
    if not eps:
        raise ValueError("epsilon list is empty")
    if len(set(eps)) != len(eps):
        raise ValueError("epsilon values must be distinct")
    for e in eps:
        if not 0.0 < e < 0.25:
            raise ValueError(f"epsilon must be in (0, 1/4), got {e}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon values must be strictly decreasing")
    return eps


def sweep(cfg: ProblemConfig, epsilons, workers: int = 1, **solve_kw) -> list:
    """Solve the template ``cfg`` at every epsilon; records come back in input order.

    A failed solve raises :class:`SweepError` carrying the completed records followed
    by the failed one (``ok=False``); later items are not reported.
    """
    eps = check_epsilons(epsilons)
    jobs = [(cfg.with_(epsilon=e), solve_kw) for e in eps]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_item, jobs))
    else:
        results = [_sweep_item(j) for j in jobs]
    out = []
    for rec in results:
        out.append(rec)
        if not rec.ok:
            raise SweepError(f"solve failed at epsilon={rec.epsilon}: {rec.error}", out)
    return out


def fit_exponent(records) -> FitResult:
    """OLS fit log sup_grad = intercept + s log(1/eps)."""
    recs = list(records)
    if len(recs) < 3:
        raise FitError("need at least 3 records")
    eps = np.array([r.epsilon for r in recs], dtype=float)
    sup = np.array([r.sup_grad for r in recs], dtype=float)
    if np.any(~np.isfinite(sup)) or np.any(sup <= 0):
        raise FitError("sup_grad must be positive and finite")
    x = np.log(1.0 / eps)
    y = np.log(sup)
    if np.ptp(x) == 0.0:
        raise FitError("degenerate fit: all epsilon values equal")
    X = np.column_stack([x, np.ones_like(x)])
    (s, c), *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - (s * x + c)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss if ss > 0 else 1.0
    return FitResult(float(s), float(c), r2, [float(v) for v in res], len(recs))


def spread(records) -> float:
    """Relative spread max/min - 1 of sup_grad over a sweep."""
    sup = np.array([r.sup_grad for r in records], dtype=float)
    return float(sup.max() / sup.min() - 1.0)


def derivative_bounds(cfg: ProblemConfig, field: Field2D) -> dict:
    """Measured constants of the tangential and normal derivative bounds.

    tangential: max |U_r| sqrt(G);  normal: max |U_n| eps / G, both over r <= 3/4.
    """
    Ur, Un = physical_derivatives(field)
    r = field.grid.r
    G = _transition(cfg, r)[:, None]
    m = r <= SUP_RADIUS + 1e-14
    return {
        "tangential": float(np.max(np.abs(Ur[m]) * np.sqrt(G[m]))),
        "normal": float(np.max(np.abs(Un[m]) * cfg.epsilon / G[m])),
    }
