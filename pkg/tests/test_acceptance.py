"""Acceptance criteria, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria" section of
the terminal summary for one PASS/FAIL line per criterion.
"""
import numpy as np
import pytest

from flatgap.blowup_lab import fit_exponent, spread, sweep
from flatgap.geometry import ProblemConfig, Profile, gap, jacobian
from flatgap.harmonics import ModeIndex
from flatgap.manufactured import mode_mms, radial_mms
from flatgap.neck_solver import (
    BoundaryData,
    assemble_and_solve_mode,
    build_grid,
    flux_and_sources,
    vertical_average,
)
from flatgap.oracle3d import mode_energy_fraction, solve_voxel
from flatgap.reduced_ode import (
    log_integrating_factor,
    log_integrating_factor_quad,
    radial_grid,
    reduce_order_vprime,
    solve_homogeneous,
)
from flatgap.verify import random_neck_points

EPS5 = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
EPS3 = [1e-2, 1e-3, 1e-4]

pytestmark = pytest.mark.acceptance


def test_criterion_01_flat_case_bounded(acceptance):
    cfg = ProblemConfig(n=3, mode_k=1, r0=0.25, gamma=0.5)
    recs = sweep(cfg, EPS5, workers=1, probes=False)
    s = fit_exponent(recs).exponent
    sp = spread(recs)
    ok = abs(s) <= 0.05 and sp < 0.25
    sups = ", ".join(f"{r.sup_grad:.3f}" for r in recs)
    assert acceptance(1, "flat k=1 |s| <= 0.05, spread < 25%", ok,
                      f"s = {s:.4f}, spread = {sp:.1%}, sup = [{sups}]")


def test_criterion_02_convex_control_blows_up(acceptance):
    cfg = ProblemConfig(n=2, mode_k=1, r0=0.0)
    s = fit_exponent(sweep(cfg, EPS5, workers=1, probes=False)).exponent
    assert acceptance(2, "convex n=2 s = 0.5 +- 0.05", abs(s - 0.5) <= 0.05, f"s = {s:.4f}")


def test_criterion_03_zero_mode_flat_case(acceptance):
    # default zero-mode data depend on both r and x_n
    cfg = ProblemConfig(n=3, mode_k=0)
    recs = sweep(cfg, EPS5, workers=1, probes=False)
    s = fit_exponent(recs).exponent
    assert acceptance(3, "flat k=0 |s| <= 0.05", abs(s) <= 0.05, f"s = {s:.4f}")


def test_criterion_04_homogeneous_bounds(acceptance):
    fails, worst_slack, worst_ratio = [], np.inf, 0.0
    for n, k in [(3, 1), (3, 2), (2, 1)]:
        dq = []
        for eps in EPS3:
            cfg = ProblemConfig(n=n, epsilon=eps, mode_k=k)
            hs = solve_homogeneous(cfg, radial_grid(cfg.r0, eps))
            r, h = hs.h.nodes, hs.h.values
            slack = min(float(np.min(h - r**k)), float(np.min(1.0 - h)))
            worst_slack = min(worst_slack, slack)
            if slack < -1e-8:
                fails.append(f"bounds ({n},{k},{eps:g})")
            inner = (r > hs.a_cut) & (r < cfg.r0)
            ratio = h[inner] / r[inner] ** k
            rel = float(np.ptp(ratio) / abs(ratio.mean()))
            worst_ratio = max(worst_ratio, rel)
            if rel > 1e-8:
                fails.append(f"inner ratio ({n},{k},{eps:g})")
            dq.append(hs.max_difference_quotient())
        if max(dq) / min(dq) >= 2.0:
            fails.append(f"|h'| variation ({n},{k})")
    detail = f"min slack {worst_slack:.2e}, inner ratio spread {worst_ratio:.2e}"
    if fails:
        detail += "; " + ", ".join(fails)
    assert acceptance(4, "homogeneous solution bounds", not fails, detail)


def test_criterion_05_integrating_factor(acceptance):
    rng = np.random.default_rng(5)
    worst = 0.0
    for cfg in (ProblemConfig(n=3, epsilon=1e-2), ProblemConfig(n=3, epsilon=1e-4),
                ProblemConfig(n=2, epsilon=1e-3), ProblemConfig(n=4, epsilon=1e-3, a=2.0)):
        for t in rng.uniform(cfg.r0 / 2, 1.0, size=100):
            closed = float(log_integrating_factor(cfg, t))
            num = log_integrating_factor_quad(cfg, float(t))
            worst = max(worst, abs(num - closed) / max(abs(closed), 1e-300))
    val = float(np.exp(log_integrating_factor(ProblemConfig(n=3, r0=0.25, epsilon=0.01), 0.5)))
    ok = worst <= 1e-8 and abs(val - 29.0) <= 29.0 * 1e-6
    assert acceptance(5, "integrating factor closed form", ok,
                      f"max rel err {worst:.2e}, exp at 0.5 = {val:.9f}")


def test_criterion_06_jacobian_identity(acceptance):
    rng = np.random.default_rng(6)
    worst = 0.0
    for cfg in (ProblemConfig(n=3, epsilon=1e-2), ProblemConfig(n=3, epsilon=1e-4),
                ProblemConfig(n=2, epsilon=1e-3)):
        p = Profile.from_config(cfg)
        x = random_neck_points(cfg, p, 10_000, rng)
        det = np.linalg.det(jacobian(p, cfg, x))
        r = np.linalg.norm(x[:, :-1], axis=1)
        rel = np.abs(det * gap(p, cfg, r) - 2 * cfg.epsilon) / (2 * cfg.epsilon)
        worst = max(worst, float(rel.max()))
    assert acceptance(6, "Jacobian identity", worst <= 1e-12, f"max rel err {worst:.2e}")


def test_criterion_07_single_mode_preservation(acceptance):
    sol = solve_voxel(Profile(a=1.0, r0=0.25), 0.1, lambda x, y, z: x, m=33)
    frac, _ = mode_energy_fraction(sol, ModeIndex(1, 1))
    zero = 0.0
    for k in (0, 1, 2, 3):
        for n in (2, 3):
            if n == 2 and k > 1:
                continue
            cfg = ProblemConfig(n=n, epsilon=1e-3, mode_k=k, r0=0.25)
            p = Profile.from_config(cfg)
            f = assemble_and_solve_mode(cfg, p, build_grid(cfg, p), BoundaryData.constant(k, 0.0))
            zero = max(zero, float(np.max(np.abs(f.values))))
    ok = frac >= 0.999 and zero <= 1e-10
    assert acceptance(7, "single-mode preservation", ok,
                      f"(1,1) energy fraction {frac:.6f}, zero-data max |U| {zero:.1e}")


def test_criterion_08_oscillation_ratio_stable(acceptance):
    cfg = ProblemConfig(n=3, mode_k=1)
    vals = [r.osc_ratio for r in sweep(cfg, EPS3, workers=1)]
    var = max(vals) / min(vals)
    assert acceptance(8, "osc ratio varies < 2x", var < 2.0,
                      "max ratio per eps [" + ", ".join(f"{v:.4f}" for v in vals)
                      + f"], variation {var:.4f}")


def test_criterion_09_ode_pde_cross_validation(acceptance):
    worst = 0.0
    for eps in EPS3:
        cfg = ProblemConfig(n=3, epsilon=eps, mode_k=1)
        p = Profile.from_config(cfg)
        g = build_grid(cfg, p, refine=1)
        f = assemble_and_solve_mode(cfg, p, g, BoundaryData.background_x1(cfg))
        _, A, B = flux_and_sources(cfg, p, f)
        V = vertical_average(f)
        r = g.r
        vp = np.gradient(V.values, r, edge_order=2)
        i0 = int(np.argmin(np.abs(r - cfg.r0 / 2)))
        out = reduce_order_vprime(cfg, solve_homogeneous(cfg, g.radial), A, B, vp[i0], V.values[i0])
        m = out.nodes <= 0.75
        pde = np.interp(out.nodes[m], r, vp)
        worst = max(worst, float(np.max(np.abs(out.values[m] - pde)) / np.max(np.abs(pde))))
    assert acceptance(9, "ODE/PDE V' agreement <= 5%", worst <= 0.05, f"max rel diff {worst:.3%}")


def test_criterion_10_manufactured_convergence(acceptance):
    cfg = ProblemConfig(n=3, epsilon=1e-2, mode_k=1)
    mode, rad = mode_mms(cfg), radial_mms(cfg)
    ratios = mode.ratios + rad.ratios
    ok = min(ratios) >= 3.5
    assert acceptance(10, "second-order convergence", ok,
                      "mode PDE ratios [" + ", ".join(f"{x:.3f}" for x in mode.ratios)
                      + "], radial BVP ratios [" + ", ".join(f"{x:.3f}" for x in rad.ratios) + "]")
