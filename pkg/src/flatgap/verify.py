"""Invariant suite behind ``flatgap verify``.

Each check returns a :class:`Check`; details are formatted with fixed precision so that
repeated runs print identical reports.  ``faults`` injects known defects for mutation
testing (currently ``"drift-sign"``, which flips the drift seen by the quadrature).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ProblemConfig, Profile, coefficients, flatten, gap, jacobian, unflatten
from .harmonics import basis_eval, circle_nodes, modes_upto
from .manufactured import mode_mms, radial_mms
from .neck_solver import BoundaryData, assemble_and_solve_mode, boundary_fluxes, build_grid
from .reduced_ode import (
    drift,
    log_integrating_factor,
    log_integrating_factor_quad,
    radial_grid,
    solve_homogeneous,
)

__all__ = ["Check", "FAULTS", "run_checks", "format_report", "random_neck_points"]

FAULTS = ("drift-sign",)
SEED = 20240607


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def random_neck_points(cfg: ProblemConfig, profile: Profile, m: int, rng) -> np.ndarray:
    """m points uniformly in |x'| < 1 (n - 1 dims) and strictly inside the gap."""
    d = cfg.n - 1
    v = rng.normal(size=(m, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = 0.999 * rng.uniform(size=m) ** (1.0 / d)
    xp = v * rad[:, None]
    lo = -cfg.epsilon / 2 + profile.h2(rad)
    hi = cfg.epsilon / 2 + profile.h1(rad)
    xn = lo + (hi - lo) * rng.uniform(0.001, 0.999, size=m)
    return np.column_stack([xp, xn])


def check_jacobian(rng) -> Check:
    worst = 0.0
    for n, eps in [(3, 1e-2), (3, 1e-4), (2, 1e-3)]:
        cfg = ProblemConfig(n=n, epsilon=eps)
        p = Profile.from_config(cfg)
        x = random_neck_points(cfg, p, 10_000, rng)
        det = np.linalg.det(jacobian(p, cfg, x))
        r = np.linalg.norm(x[:, :-1], axis=1)
        rel = np.abs(det * gap(p, cfg, r) - 2 * eps) / (2 * eps)
        worst = max(worst, float(rel.max()))
    return Check("jacobian_identity", worst <= 1e-12, f"max rel err {worst:.3e}")


def check_round_trip(rng) -> Check:
    cfg = ProblemConfig(n=3, epsilon=1e-3)
    p = Profile.from_config(cfg)
    x = random_neck_points(cfg, p, 10_000, rng)
    back = unflatten(p, cfg, flatten(p, cfg, x))
    err = float(np.max(np.abs(back - x)))
    ok = err <= 1e-12 * float(np.max(np.abs(x)))
    return Check("flatten_round_trip", ok, f"max abs err {err:.3e}")


def check_positive_definite(rng) -> Check:
    worst = np.inf
    for eps in (1e-5, 1e-3, 1e-1 * 0.999):
        cfg = ProblemConfig(n=3, epsilon=eps)
        p = Profile.from_config(cfg)
        for _ in range(200):
            rad = rng.uniform(0, 0.999)
            th = rng.uniform(0, 2 * np.pi)
            y = np.array([rad * np.cos(th), rad * np.sin(th), eps * rng.uniform(-1, 1)])
            c = coefficients(p, cfg, y)
            if not np.array_equal(c.matrix, c.matrix.T):
                return Check("coefficients_spd", False, "asymmetric matrix")
            worst = min(worst, c.min_eigenvalue() / eps)
    return Check("coefficients_spd", worst > 0, f"min eig/eps {worst:.3e}")


def check_homogeneous() -> Check:
    fails = []
    for n, k in [(3, 1), (3, 2), (2, 1)]:
        dq = []
        for eps in (1e-2, 1e-3, 1e-4):
            cfg = ProblemConfig(n=n, epsilon=eps, mode_k=k, mode_i=1)
            grid = radial_grid(cfg.r0, eps)
            hs = solve_homogeneous(cfg, grid)
            r, h = hs.h.nodes, hs.h.values
            inner = (r > hs.a_cut) & (r < cfg.r0)
            ratio = h[inner] / r[inner] ** k
            if not hs.bounds_ok:
                fails.append(f"bounds n={n} k={k} eps={eps:g}")
            if np.ptp(ratio) > 1e-8 * abs(ratio.mean()):
                fails.append(f"inner ratio n={n} k={k} eps={eps:g}")
            dq.append(hs.max_difference_quotient())
        if max(dq) / min(dq) >= 2.0:
            fails.append(f"|h'| variation n={n} k={k}")
    return Check("homogeneous_bounds", not fails, "; ".join(fails) or "9 configs")


def check_integrating_factor(rng, faults=()) -> Check:
    b = None
    if "drift-sign" in faults:
        def b(cfg, s):
            return -drift(cfg, s)
    worst = 0.0
    for cfg in (
        ProblemConfig(n=3, epsilon=1e-2),
        ProblemConfig(n=3, epsilon=1e-4),
        ProblemConfig(n=2, epsilon=1e-3),
    ):
        s0 = cfg.r0 / 2
        for t in rng.uniform(s0, 1.0, size=100):
            closed = float(log_integrating_factor(cfg, t))
            num = log_integrating_factor_quad(cfg, float(t), b=b)
            worst = max(worst, abs(num - closed) / max(abs(closed), 1e-300))
    val = float(np.exp(log_integrating_factor(ProblemConfig(n=3, epsilon=0.01), 0.5)))
    ok = worst <= 1e-8 and abs(val - 29.0) <= 29.0 * 1e-6
    return Check("integrating_factor", ok, f"max rel err {worst:.3e}; exp at 0.5 = {val:.10f}")


def check_orthonormality() -> Check:
    theta, w = circle_nodes(64)
    modes = modes_upto(4)
    Y = np.array([basis_eval(m, theta).values for m in modes])
    gram = (Y * w) @ Y.T
    err = float(np.max(np.abs(gram - np.eye(len(modes)))))
    return Check("orthonormality", err <= 1e-10, f"max |G - I| {err:.3e}")


def check_mms() -> list:
    out = []
    for name, study in (
        ("mms_mode_pde", mode_mms(ProblemConfig(n=3, epsilon=1e-2, mode_k=1))),
        ("mms_radial_bvp", radial_mms(ProblemConfig(n=3, epsilon=1e-2, mode_k=1))),
    ):
        rat = study.ratios
        out.append(Check(name, min(rat) >= 3.5, "ratios " + ", ".join(f"{x:.3f}" for x in rat)))
    return out


def check_zero_data() -> Check:
    worst = 0.0
    for k in (0, 1, 2):
        cfg = ProblemConfig(n=3, epsilon=1e-3, mode_k=k)
        p = Profile.from_config(cfg)
        f = assemble_and_solve_mode(cfg, p, build_grid(cfg, p), BoundaryData.constant(k, 0.0))
        worst = max(worst, float(np.max(np.abs(f.values))))
    return Check("zero_data_solves", worst <= 1e-10, f"max |U| {worst:.3e}")


def check_constant_zero_mode() -> Check:
    cfg = ProblemConfig(n=3, epsilon=1e-3, mode_k=0)
    p = Profile.from_config(cfg)
    f = assemble_and_solve_mode(cfg, p, build_grid(cfg, p), BoundaryData.constant(0, 2.5))
    err = float(np.max(np.abs(f.values - 2.5)))
    return Check("constant_zero_mode", err <= 1e-8 * 2.5, f"max |U - c| {err:.3e}")


def check_conservation() -> Check:
    cfg = ProblemConfig(n=3, epsilon=1e-3, mode_k=1)
    p = Profile.from_config(cfg)
    f = assemble_and_solve_mode(cfg, p, build_grid(cfg, p), BoundaryData.background_x1(cfg))
    fl = boundary_fluxes(f)
    rel = abs(fl["wall"] + fl["axis"] - fl["absorption"]) / abs(fl["wall"])
    return Check("discrete_conservation", rel <= 1e-8, f"rel imbalance {rel:.3e}")


def run_checks(faults=()) -> list:
    unknown = set(faults) - set(FAULTS)
    if unknown:
        raise ValueError(f"unknown fault(s): {sorted(unknown)}")
    rng = np.random.default_rng(SEED)
    checks = [
        check_jacobian(rng),
        check_round_trip(rng),
        check_positive_definite(rng),
        check_homogeneous(),
        check_integrating_factor(rng, faults),
        check_orthonormality(),
        *check_mms(),
        check_zero_data(),
        check_constant_zero_mode(),
        check_conservation(),
    ]
    return checks


def format_report(checks) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}  {c.detail}" for c in checks]
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"
