import math

import numpy as np
import pytest

from killing_cmc import profiles as pr
from killing_cmc.equidistant import EquidistantChart
from killing_cmc.solver import (BracketError, CmcOperator, DirichletFamily, ExhaustionError,
                                MeshParams, NewtonError, PolarMesh, ScalarField, StarDomain,
                                barrier_check, barrier_slope, boundary_gradient_sup,
                                exhaustion_schedule, exterior_solve, find_t_for_slope,
                                first_exhaustion_radius, gradient_on_circle, height_limit,
                                newton_solve, residual_MH, solve_dirichlet, solve_on_equidistant)
from killing_cmc.solver import continuation

DISK = StarDomain.disk(1.0)
ELLIPSE = StarDomain.ellipse(1.0, 1.5)
V110 = pr.RadialProfile(pr.CmcParams(1.0, 1.0, 0.0))


# -- domains and meshes ----------------------------------------------------------------------

def test_star_domain_validation():
    with pytest.raises(ValueError):
        StarDomain.disk(0.0)
    with pytest.raises(ValueError):
        StarDomain.ellipse(1.0, -1.0)
    assert DISK.is_radial and not ELLIPSE.is_radial
    assert ELLIPSE.enclosing_radius() == pytest.approx(1.5, abs=1e-6)


def test_mesh_nodes_increase_and_are_periodic():
    m = PolarMesh(ELLIPSE, 5.0, 17, 12, 4.0)
    assert np.all(np.diff(m.r, axis=0) > 0)
    assert m.r[0] == pytest.approx(ELLIPSE.rho(m.theta))
    assert np.all(m.r[-1] == 5.0)
    with pytest.raises(ValueError):
        PolarMesh(ELLIPSE, 1.2, 17, 12)


def test_scalar_field_rejects_non_finite():
    m = PolarMesh(DISK, 3.0, 5, 4)
    with pytest.raises(ValueError):
        ScalarField(m, np.full(m.shape, np.nan))
    with pytest.raises(ValueError):
        ScalarField(m, np.zeros((3, 3)))


# -- operator --------------------------------------------------------------------------------

@pytest.mark.parametrize("H, expected", [(0.0, 0.0), (0.5, -1.0)])
def test_residual_of_constants(H, expected):
    m = PolarMesh(ELLIPSE, 4.0, 20, 16, 4.0)
    res = residual_MH(ScalarField(m, np.full(m.shape, 0.3)), H).values
    assert np.abs(res[1:-1] - expected).max() < 1e-13
    assert np.all(res[[0, -1]] == 0.0)


def test_residual_on_profile_is_second_order():
    norms = []
    for n in (32, 64, 128):
        m = PolarMesh(DISK, 6.0, n, 4, 4.0)
        norms.append(np.abs(residual_MH(ScalarField(m, V110.values(m.r)), 0.0).values).max())
    ratios = [a / b for a, b in zip(norms, norms[1:])]
    assert all(3.5 < q < 4.5 for q in ratios), ratios


def test_jacobian_matches_finite_differences():
    m = PolarMesh(ELLIPSE, 4.0, 9, 8, 2.0)
    op = CmcOperator(m, 0.4)
    rng = np.random.default_rng(0)
    U = rng.uniform(0.0, 0.5, m.shape)
    d = rng.standard_normal(m.shape)
    J = op.jacobian(U)
    eps = 1e-6
    fd = (op.residual(U + eps * d, 0.0, 0.5) - op.residual(U - eps * d, 0.0, 0.5)) / (2 * eps)
    assert np.abs(J @ d.ravel() - fd).max() < 1e-6 * max(1.0, np.abs(fd).max())


def test_roundoff_floor_is_tiny_but_positive():
    m = PolarMesh(DISK, 4.0, 16, 8, 4.0)
    op = CmcOperator(m, 0.3)
    fl = op.roundoff_floor(np.ones(m.shape))
    assert 0.0 < fl < 1e-10


# -- Dirichlet solves ------------------------------------------------------------------------

def test_zero_height_gives_zero_field():
    f = solve_dirichlet(ELLIPSE, 4.0, 0.0, 0.0, MeshParams(16, 8))
    assert np.all(f.values == 0.0)


def test_dirichlet_radial_oracle_second_order():
    T = V110.value(6.0)
    errs = []
    for n in (32, 64, 128):
        f = solve_dirichlet(DISK, 6.0, T, 0.0, MeshParams(n, 4))
        errs.append(np.abs(f.values - V110.values(f.mesh.r)).max())
        assert np.abs(residual_MH(f, 0.0).values).max() <= 1e-8
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 < q < 4.5 for q in ratios), ratios


def test_dirichlet_boundary_data_and_comparison():
    t1, t2 = 0.1, 0.25
    u1 = solve_dirichlet(ELLIPSE, 5.0, t1, 0.3, MeshParams(24, 16))
    u2 = solve_dirichlet(ELLIPSE, 5.0, t2, 0.3, MeshParams(24, 16))
    assert np.all(u1.values[0] == 0.0) and np.all(u1.values[-1] == t1)
    assert np.all(u1.values <= u2.values + 1e-12)


def test_dirichlet_radial_exactness():
    f = solve_dirichlet(DISK, 6.0, 0.3, 0.6, MeshParams(32, 12))
    assert f.angular_spread() < 1e-9


@pytest.mark.parametrize("kwargs", [dict(t=-0.1, H=0.0), dict(t=0.8, H=0.0), dict(t=0.1, H=1.0),
                                    dict(t=0.1, H=-0.2)])
def test_dirichlet_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        solve_dirichlet(DISK, 4.0, mesh=MeshParams(8, 4), **kwargs)


def test_height_limits():
    assert height_limit(0.0) == math.pi / 4
    assert height_limit(0.5) == pytest.approx(pr.height_bound_B(0.5))


def test_newton_reports_failure():
    m = PolarMesh(DISK, 4.0, 16, 4)
    with pytest.raises(NewtonError) as exc:
        newton_solve(CmcOperator(m, 0.0), np.zeros(m.shape), 0.0, 0.5, max_iter=0)
    assert exc.value.residual_norm > 0


def test_family_matches_direct_solve():
    m = MeshParams(24, 8).build(ELLIPSE, 5.0)
    op = CmcOperator(m, 0.3)
    fam = DirichletFamily(op, 0.0, 0.0)
    U, _ = fam.solve(0.4)
    V = solve_dirichlet(ELLIPSE, 5.0, 0.4, 0.3, MeshParams(24, 8)).values
    assert np.abs(U - V).max() < 1e-8


# -- boundary slopes -------------------------------------------------------------------------

def test_boundary_gradient_of_zero_field():
    m = PolarMesh(ELLIPSE, 4.0, 16, 8)
    assert boundary_gradient_sup(ScalarField(m, np.zeros(m.shape))) == 0.0


@pytest.mark.parametrize("params", [(1.0, 1.0, 0.0), (0.5, 2.0, 0.3), (2.0, 0.5, 0.6)])
def test_boundary_gradient_of_sampled_profile(params):
    prof = pr.RadialProfile(pr.CmcParams(*params))
    s = params[1]
    errs = []
    for n in (32, 64, 128):
        m = PolarMesh(StarDomain.disk(params[0]), params[0] + 5.0, n, 4, 4.0)
        errs.append(abs(boundary_gradient_sup(ScalarField(m, prof.values(m.r))) - s))
    assert errs[-1] < 1e-3
    assert errs[0] / errs[1] > 3.0 and errs[1] / errs[2] > 3.0


def test_boundary_gradient_increases_with_t():
    s = [boundary_gradient_sup(solve_dirichlet(ELLIPSE, 5.0, t, 0.0, MeshParams(24, 16)))
         for t in np.linspace(0.0, 0.5, 6)]
    assert np.all(np.diff(s) > 0)


# -- slope search ----------------------------------------------------------------------------

def test_find_t_zero_slope():
    t, f, rep = find_t_for_slope(ELLIPSE, 4.0, 0.0, 0.0, mesh=MeshParams(16, 8))
    assert t == 0.0 and np.all(f.values == 0.0) and rep.sup_grad_inner == 0.0


def test_find_t_radial_oracle():
    t, f, rep = find_t_for_slope(DISK, 8.0, 0.0, 1.0, mesh=MeshParams(64, 4))
    assert abs(rep.sup_grad_inner - 1.0) <= 1e-8
    assert t < math.pi / 4 and rep.slope_monotone
    assert np.abs(f.values - V110.values(f.mesh.r)).max() < 1e-3
    assert rep.residual_norm <= 1e-8


@pytest.mark.parametrize("H", [0.0, 0.3, 0.6])
def test_find_t_respects_height_bound(H):
    t, f, rep = find_t_for_slope(ELLIPSE, 4.0, H, 2.0, mesh=MeshParams(24, 16))
    assert 0.0 < t <= height_limit(H)
    assert f.max() <= height_limit(H) + 1e-3
    assert abs(rep.sup_grad_inner - 2.0) <= 1e-8


def test_bracket_failure_reports_both_ends(monkeypatch):
    monkeypatch.setattr(continuation, "height_limit", lambda H, quad_tol=None: 0.01)
    with pytest.raises(BracketError) as exc:
        find_t_for_slope(DISK, 4.0, 0.0, 1.0, mesh=MeshParams(16, 4))
    e = exc.value
    assert e.t_lo == 0.0 and e.slope_lo == 0.0
    assert e.t_hi == pytest.approx(0.01) and 0.0 < e.slope_hi < 1.0


@pytest.mark.parametrize("s", ["inf", math.inf, -1.0])
def test_find_t_rejects_bad_slopes(s):
    with pytest.raises(ValueError):
        find_t_for_slope(DISK, 4.0, 0.0, s, mesh=MeshParams(8, 4))


# -- exhaustion ------------------------------------------------------------------------------

def test_first_exhaustion_radius():
    R1 = first_exhaustion_radius(1.0, 1.0, 0.0)
    assert barrier_slope(1.0, 0.0)(R1) == pytest.approx(0.5, abs=1e-9)
    assert all(barrier_slope(1.0, 0.0)(R) <= 0.5 + 1e-12 for R in np.linspace(R1, R1 + 10, 30))
    assert first_exhaustion_radius(1.0, 0.0) == 2.0
    c = EquidistantChart(0.5)
    R1e = first_exhaustion_radius(1.0, 1.0, 0.5, c)
    assert barrier_slope(1.0, 0.5, c)(R1e) == pytest.approx(0.5, abs=1e-9)


def test_exhaustion_schedule():
    assert exhaustion_schedule(2.0, 3, 1.5) == [2.0, 3.5, 5.0]
    with pytest.raises(ValueError):
        exhaustion_schedule(2.0, 0)


def test_exterior_solve_validates_radii():
    with pytest.raises(ValueError):
        exterior_solve(DISK, 0.0, 1.0, [5.0, 4.0], mesh=MeshParams(8, 4))
    with pytest.raises(ValueError):
        exterior_solve(DISK, 0.0, 1.0, [1.1, 5.0], mesh=MeshParams(8, 4))
    with pytest.raises(ValueError):
        exterior_solve(DISK, 0.0, 1.0, [4.0], mesh=MeshParams(8, 4), surface="plane")


def test_exterior_solve_radial_converges():
    res = exterior_solve(DISK, 0.0, 1.0, [4.0, 7.0, 10.0], mesh=MeshParams(64, 8))
    rep = res.report
    assert rep.converged and len(rep.stage_changes) == 2
    assert rep.stage_changes[-1] < 1e-3
    f = res.field
    assert np.abs(f.values - V110.values(f.mesh.r)).max() < 1e-3
    assert f.angular_spread() < 1e-9
    assert rep.sup_u < math.pi / 4


def test_exterior_solve_ellipse_gradient_decay():
    res = exterior_solve(ELLIPSE, 0.3, 1.0, [5.0, 8.0, 11.0], mesh=MeshParams(48, 32))
    assert res.report.converged
    f = res.field
    g = [gradient_on_circle(f, R) for R in (3.0, 5.0, 8.0)]
    assert g[0] > g[1] > g[2] and g[2] < 0.05
    assert f.max() <= pr.height_bound_B(0.3) + 1e-3


def test_exhaustion_error_on_growing_changes(monkeypatch):
    vals = iter([0.1, 0.2])
    monkeypatch.setattr(continuation, "_stage_change", lambda old, new: next(vals))
    with pytest.raises(ExhaustionError) as exc:
        exterior_solve(DISK, 0.0, 1.0, [4.0, 5.0, 6.0], mesh=MeshParams(16, 4), stage_tol=1e-3)
    assert exc.value.changes == [0.1, 0.2]


def test_exterior_solve_reproducible():
    a = exterior_solve(ELLIPSE, 0.0, 1.0, [4.0, 5.0], mesh=MeshParams(16, 8)).field.values
    b = exterior_solve(ELLIPSE, 0.0, 1.0, [4.0, 5.0], mesh=MeshParams(16, 8)).field.values
    assert np.array_equal(a, b)


# -- barriers --------------------------------------------------------------------------------

def test_barrier_check_zero_field():
    m = PolarMesh(DISK, 5.0, 16, 4)
    rep = barrier_check(ScalarField(m, np.zeros(m.shape)), 0.0, 1.0, 5.0, 0.0)
    assert rep.passed and rep.upper == 0.0


def test_barrier_check_flags_violations():
    m = PolarMesh(DISK, 5.0, 64, 4)
    rep = barrier_check(ScalarField(m, np.full(m.shape, 0.5)), 0.2, 1.0, 5.0, 0.0)
    assert not rep.passed and rep.upper == pytest.approx(0.3)


def test_barrier_check_on_solution_and_refinement():
    worst = []
    for n in (32, 64):
        t, f, _ = find_t_for_slope(DISK, 6.0, 0.0, 1.0, mesh=MeshParams(n, 4))
        rep = barrier_check(f, t, 1.0, 6.0, 0.0)
        assert rep.passed
        worst.append(rep.sharp_lower)
    assert worst[1] <= max(worst[0], 0.0) + 1e-12


def test_barrier_check_on_equidistant_solution():
    c = EquidistantChart(0.5)
    st = solve_on_equidistant(DISK, 0.5, 1.0, 6.0, mesh=MeshParams(48, 4), chart=c)
    assert barrier_check(st.field, st.t_star, 1.0, 6.0, 0.5, c).passed


# -- equidistant pipeline --------------------------------------------------------------------

def test_equidistant_zero_slope_is_exact():
    st = solve_on_equidistant(ELLIPSE, 0.5, 0.0, 5.0, mesh=MeshParams(16, 8))
    assert st.t_star == 0.0 and np.all(st.field.values == 0.0)
    # w is the exact continuum solution; its discrete residual is truncation error
    res = [solve_on_equidistant(DISK, 0.5, 0.0, 5.0, mesh=MeshParams(n, 4)).report.residual_norm
           for n in (32, 64, 128)]
    assert res[0] / res[1] > 3.0 and res[1] / res[2] > 3.0


def test_equidistant_rejects_bad_H():
    for H in (0.0, 1.0):
        with pytest.raises(ValueError):
            solve_on_equidistant(DISK, H, 1.0, 5.0, mesh=MeshParams(8, 4))


def test_equidistant_solution_properties():
    c = EquidistantChart(0.6)
    st = solve_on_equidistant(ELLIPSE, 0.6, 1.0, 5.0, mesh=MeshParams(32, 16), chart=c)
    assert np.abs(st.field.values[0]).max() < 1e-12
    assert abs(boundary_gradient_sup(st.base_field, c) - 1.0) <= 1e-8
    assert st.field.max() <= pr.height_bound_B(0.6) + 1e-3
    assert np.allclose(st.field.surface_radius[-1], 5.0)
