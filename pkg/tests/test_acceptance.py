"""Acceptance criteria 1-11.  Each test prints one ``CRITERION n: PASS|FAIL`` line.

The lines appear in the pytest output; ``python tests/test_acceptance.py``
prints the summary alone.
"""
import functools
import math
import sys
import time

import numpy as np
import pytest

from killing_cmc import geometry as geo
from killing_cmc import profiles as pr
from killing_cmc.equidistant import EquidistantChart, gradient_transform
from killing_cmc.solver import (MeshParams, StarDomain, barrier_check, exterior_solve,
                                gradient_on_circle, solve_on_equidistant)
from oracles import (TEST_FUNCTIONS, B_midpoint, base_gradient_fd, base_slope_for_eh_slope,
                     eh_gradient, frame_components, profile_curve, w_closed)

PI_4 = 0.78539816
DISK = StarDomain.disk(1.0)
ELLIPSE = StarDomain.ellipse(1.0, 1.5)


def emit(n, passed, detail):
    line = f"CRITERION {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(line, flush=True)
    return passed


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# -- 1 ---------------------------------------------------------------------------------------

def criterion_1():
    B0, dt = timed(lambda: pr.height_bound_B(0.0, quad_tol=1e-10))
    ref = B_midpoint(0.0)
    ok = B0 < PI_4 and abs(B0 - ref) <= 1e-8 and dt < 1.0
    return emit(1, ok, f"B(0) = {B0:.12f} < {PI_4}, |B - midpoint| = {abs(B0 - ref):.2e}, "
                       f"{dt:.3f} s")


# -- 2 ---------------------------------------------------------------------------------------

def criterion_2():
    def run():
        Hs = [round(0.1 * k, 1) for k in range(10)]
        return [pr.height_bound_B(H) for H in Hs], pr.height_bound_B(0.999)

    (B, B999), dt = timed(run)
    inc = all(b > a for a, b in zip(B, B[1:]))
    ok = inc and B999 > B[-1] + 1.0 and dt < 5.0
    return emit(2, ok, f"increasing = {inc}, B(0.999) - B(0.9) = {B999 - B[-1]:.4f}, {dt:.3f} s")


# -- 3 ---------------------------------------------------------------------------------------

ODE_CASES = [(0.3, 0.5, 0.0), (1.0, 1.0, 0.0), (2.0, 3.0, 0.0), (1.0, math.inf, 0.0),
             (0.5, 1.0, 0.3), (1.0, 0.2, 0.3), (1.5, math.inf, 0.3), (0.7, 2.0, 0.6),
             (1.0, math.inf, 0.6), (2.0, 0.5, 0.9), (0.4, math.inf, 0.9), (0.75, 10.0, 0.1)]


def criterion_3():
    def run():
        worst = 0.0
        for rho, s, H in ODE_CASES:
            p = pr.CmcParams(rho, pr.INFINITE if math.isinf(s) else s, H)
            r = np.linspace(rho + 1e-3, rho + 6.0, 100)
            h = 1e-5
            g = pr.slope_g(r, p)
            gp = (pr.slope_g(r + h, p) - pr.slope_g(r - h, p)) / (2 * h)
            res = gp + g * (1 / np.tanh(r) + np.tanh(r)) - 2 * H
            worst = max(worst, float(np.abs(res).max()))
        return worst

    worst, dt = timed(run)
    ok = worst < 1e-8 and dt < 5.0
    return emit(3, ok, f"max |g' + g (coth + tanh) - 2H| = {worst:.2e} over 12 x 100, {dt:.3f} s")


# -- 4 ---------------------------------------------------------------------------------------

def criterion_4():
    worst = 0.0
    for rho in (0.5, 1.0, 2.0):
        for s in (0.1, 1.0, 5.0):
            for H in (0.0, 0.4, 0.8):
                d = pr.profile_derivative(rho, pr.CmcParams(rho, s, H))
                worst = max(worst, abs(float(d) - s))
    return emit(4, worst <= 1e-10, f"max |f'(rho) - s| = {worst:.2e} on 27 cases")


# -- 5, 7, 8 ---------------------------------------------------------------------------------

RADIAL_MESHES = [(64, 32), (128, 64), (256, 128)]


@functools.lru_cache(maxsize=None)
def radial_runs():
    t0 = time.perf_counter()
    runs = [exterior_solve(DISK, 0.0, 1.0, [4.0, 7.0, 10.0], mesh=MeshParams(n_r, n_t))
            for n_r, n_t in RADIAL_MESHES]
    return runs, time.perf_counter() - t0


def criterion_5():
    runs, dt = radial_runs()
    v = pr.RadialProfile(pr.CmcParams(1.0, 1.0, 0.0))
    errs = [float(np.abs(r.field.values - v.values(r.field.mesh.r)).max()) for r in runs]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    conv = all(r.report.converged for r in runs)
    ok = conv and all(abs(q - 2.0) <= 0.5 for q in orders) and errs[-1] < 1e-4 and dt < 120
    return emit(5, ok, "errors " + ", ".join(f"{e:.2e}" for e in errs) + ", orders "
                + ", ".join(f"{q:.2f}" for q in orders) + f", {dt:.1f} s")


def criterion_7():
    runs, _ = radial_runs()
    worst, margin, ok = -math.inf, -math.inf, True
    for r in runs:
        for st in r.stages:
            rep = barrier_check(st.field, st.t_star, 1.0, st.R_outer, 0.0)
            ok = ok and rep.passed
            worst = max(worst, rep.worst)
            margin = max(margin, rep.worst - rep.tolerance)
    return emit(7, ok, f"9 stages checked, worst signed violation {worst:.3e}, "
                       f"largest excess over 5h^2 {margin:.3e}")


def criterion_8():
    runs, _ = radial_runs()
    f = runs[-1].field
    g = [gradient_on_circle(f, R) for R in (3.0, 5.0, 8.0)]
    ok = g[0] > g[1] > g[2] and g[2] < 0.05
    return emit(8, ok, "max |grad u| at r = 3, 5, 8: " + ", ".join(f"{x:.3e}" for x in g))


# -- 6 ---------------------------------------------------------------------------------------

def criterion_6():
    lines, ok = [], True
    t0 = time.perf_counter()
    mesh = MeshParams(48, 32)
    for surface, Hs in (("H2", (0.0, 0.3, 0.6)), ("E_H", (0.3, 0.6))):
        for H in Hs:
            bound = math.pi / 4 if H == 0.0 else pr.height_bound_B(H)
            for name, dom in (("disk", DISK), ("ellipse", ELLIPSE)):
                res = exterior_solve(dom, H, 1.0, mesh=mesh, surface=surface, step=3.0)
                sup = res.report.sup_u
                good = res.report.converged and (sup < bound + 1e-3 if H == 0.0
                                                 else sup <= bound + 1e-3)
                ok = ok and good
                lines.append(f"{surface}/{name}/H={H}: {sup:.4f} vs {bound:.4f}")
    dt = time.perf_counter() - t0
    return emit(6, ok, "; ".join(lines) + f"; {dt:.1f} s")


# -- 9 ---------------------------------------------------------------------------------------

def criterion_9():
    chart = EquidistantChart(0.5)
    rates, central = [], 0.0
    for F in TEST_FUNCTIONS:
        for r, th in [(0.7, 0.3), (1.5, 2.0), (3.0, 4.5)]:
            x = chart.lift(r, th)
            g = frame_components(gradient_transform(eh_gradient(F, x, 0.5),
                                                    geo.hemisphere_point(r, th), chart), r, th)
            central = max(central, float(np.abs(base_gradient_fd(F, r, th, chart, 1e-5) - g).max()))
            errs = [float(np.abs(base_gradient_fd(F, r, th, chart, h, central=False) - g).max())
                    for h in (4e-3, 2e-3, 1e-3)]
            rates += [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    rng = np.random.default_rng(9)
    ident = 0.0
    for u in (lambda R, t: 0.2 * R * np.sin(t), lambda R, t: np.exp(-R) * np.cos(2 * t),
              lambda R, t: 0.5 + 0.0 * R):
        R, th = rng.uniform(0.0, 5.0, 300), rng.uniform(0.0, 2 * math.pi, 300)
        over_eh = np.exp(u(R, th))[:, None] * chart.eh_point(R, th)
        r = chart.base_radius(R)
        ut = u(R, th) + chart.w(r)
        over_base = np.exp(ut)[:, None] * geo.hemisphere_point(r, th)
        ident = max(ident, float(geo.distance_arrays(over_eh, over_base).max()))
    ok = all(0.8 < q < 1.2 for q in rates) and central < 1e-6 and ident <= 1e-10
    return emit(9, ok, f"forward-difference orders in [{min(rates):.3f}, {max(rates):.3f}], "
                       f"central mismatch {central:.2e}, graph-set identity {ident:.2e}")


# -- 10 --------------------------------------------------------------------------------------

def criterion_10():
    parts, ok = [], True
    for rho in (0.5, 1.0, 2.0):
        c = pr.catenoid_limit_certified(rho)
        upper = c.value + c.tail_bound + c.quad_error
        good = math.isfinite(c.tail_bound) and c.tail_bound >= 0.0 and upper < math.pi / 2
        ok = ok and good
        parts.append(f"rho={rho}: {c.value:.6f} + tail {c.tail_bound:.1e}")
    return emit(10, ok, "; ".join(parts) + f" < pi/2 = {math.pi / 2:.6f}")


# -- 11 --------------------------------------------------------------------------------------

def criterion_11():
    t0 = time.perf_counter()
    H = 0.5
    chart = EquidistantChart(H)
    zero = solve_on_equidistant(ELLIPSE, H, 0.0, 5.0, mesh=MeshParams(32, 16), chart=chart)
    zero_ok = zero.t_star == 0.0 and float(np.abs(zero.field.values).max()) <= 1e-9
    errs = []
    for n in (64, 128, 256):
        st = solve_on_equidistant(DISK, H, 1.0, 8.0, mesh=MeshParams(n, 4), chart=chart)
        r = st.base_field.mesh.r[:, 0]
        rho = float(r[0])
        exact = w_closed(rho, H) + profile_curve(r, rho, base_slope_for_eh_slope(rho, 1.0, H), H)
        errs.append(float(np.abs(st.base_field.values - exact[:, None]).max()))
        h2 = st.base_field.mesh.h ** 2
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    dt = time.perf_counter() - t0
    ok = zero_ok and all(abs(q - 2.0) <= 0.5 for q in orders) and errs[-1] <= 10 * h2 and dt < 120
    return emit(11, ok, f"s = 0 exact: {zero_ok}; s = 1 errors "
                + ", ".join(f"{e:.2e}" for e in errs) + ", orders "
                + ", ".join(f"{q:.2f}" for q in orders) + f", {dt:.1f} s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{k}" for k in range(1, 12)])
def test_criterion(criterion, capsys):
    with capsys.disabled():
        print()
        passed = criterion()
    assert passed


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
