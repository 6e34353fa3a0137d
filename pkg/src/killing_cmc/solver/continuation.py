"""Dirichlet solves, the boundary-slope search in the outer height, and domain exhaustion.

Fields over H^2 vanish on the inner boundary and equal ``t`` on the outer circle.
For E_H the problem is solved for the base description ``u~ = u o phi_w + w`` and
transformed back.  The search raises ``t`` until the largest signed boundary slope
reaches the target: by the comparison principle the inward normal derivative on
the inner boundary is nondecreasing in ``t``, which brackets the root.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ..equidistant import EquidistantChart, barrier_f_R, equidistant_slope_from_base
from ..profiles import (DEFAULT_QUAD_TOL, INFINITE, CmcParams, RadialProfile, height_bound_B,
                        is_infinite, parse_slope)
from .mesh import PolarMesh, ScalarField, StarDomain
from .newton import DirichletFamily, NewtonError, NewtonStats, newton_solve
from .operator import CmcOperator, gradient_norm, nodal_gradient

log = logging.getLogger(__name__)

DEFAULT_STRETCH = 4.0
DEFAULT_NEWTON_TOL = 1e-9
DEFAULT_SLOPE_TOL = 1e-8
DEFAULT_STAGE_TOL = 1e-3
MAX_SEARCH_STEPS = 80


class BracketError(RuntimeError):
    """The boundary slope could not be bracketed on ``[0, t_max]``."""

    def __init__(self, message, t_lo, slope_lo, t_hi, slope_hi):
        super().__init__(message)
        self.t_lo, self.slope_lo = t_lo, slope_lo
        self.t_hi, self.slope_hi = t_hi, slope_hi


class ExhaustionError(RuntimeError):
    """Stage-to-stage changes fail to decrease."""

    def __init__(self, message, changes):
        super().__init__(message)
        self.changes = list(changes)


@dataclass(frozen=True)
class MeshParams:
    n_r: int = 64
    n_theta: int = 32
    stretch: float = DEFAULT_STRETCH

    def build(self, domain: StarDomain, R_outer: float) -> PolarMesh:
        return PolarMesh(domain, R_outer, self.n_r, self.n_theta, self.stretch)


@dataclass
class SolveReport:
    t_star: float
    sup_grad_inner: float
    sup_u: float
    residual_norm: float
    newton_iters: int
    mesh: dict
    H: float = 0.0
    s: float = 0.0
    surface: str = "H2"
    t_max: float = math.nan
    slope_error: float = 0.0
    search: list = field(default_factory=list)
    slope_monotone: bool = True
    stages: list = field(default_factory=list)
    stage_changes: list = field(default_factory=list)
    converged: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class StageResult:
    """One solved stage: outer height, field (on the solution surface) and report."""

    R_outer: float
    t_star: float
    field: ScalarField
    report: SolveReport
    base_field: ScalarField | None = None


@dataclass
class ExteriorResult:
    stages: list
    report: SolveReport

    @property
    def field(self) -> ScalarField:
        return self.stages[-1].field


# -- pointwise quantities --------------------------------------------------------------------

def height_limit(H: float, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Largest admissible outer height: pi/4 for H = 0, B(H) otherwise."""
    _check_solver_H(H)
    return math.pi / 4 if H == 0.0 else height_bound_B(H, quad_tol)


def _check_solver_H(H):
    if not 0.0 <= H < 1.0:
        raise ValueError(f"solver needs H in [0, 1), got {H!r}")


def _check_solver_slope(s):
    s = parse_slope(s)
    if is_infinite(s):
        raise ValueError("the solver accepts finite slopes only; s = inf is handled by the profiles")
    if s < 0.0:
        raise ValueError("slope must be >= 0")
    return float(s)


def residual_MH(field: ScalarField, H: float) -> ScalarField:
    """Nodal ``M_H`` of a field over H^2; boundary rows carry zero (they hold Dirichlet data)."""
    op = CmcOperator(field.mesh, H)
    out = np.zeros(field.mesh.shape)
    out[1:-1] = op.interior_residual(field.values)
    return ScalarField(field.mesh, out, info={"H": float(H)})


def _signed_slopes(mesh: PolarMesh, U, chart: EquidistantChart | None = None):
    """Boundary slope per inner node, signed by the radial derivative, and its magnitude."""
    u_r, u_t = nodal_gradient(mesh, U)
    u_r, u_t = u_r[0], u_t[0]
    if chart is None:
        mag = np.hypot(u_r, u_t)
        sign = np.sign(u_r)
    else:
        r = mesh.r[0]
        mag = equidistant_slope_from_base(u_r, u_t, r, chart)
        sign = np.sign(u_r - chart.w_prime(r))
    return sign * mag, mag


def boundary_gradient_sup(field: ScalarField, chart: EquidistantChart | None = None) -> float:
    """Largest ``|grad u|`` over inner-boundary nodes.

    With ``chart`` the field is the base description ``u~`` of a graph over E_H and
    the slope is measured on E_H.
    """
    return float(_signed_slopes(field.mesh, field.values, chart)[1].max())


def gradient_on_circle(field: ScalarField, R: float) -> float:
    """Max over angles of ``|grad u|`` at radius ``R``, by cubic interpolation along rays."""
    mesh = field.mesh
    if not (mesh.r[0].max() <= R <= mesh.R_outer):
        raise ValueError(f"radius {R} outside the meshed annulus")
    g = gradient_norm(mesh, field.values)
    return float(max(CubicSpline(mesh.r[:, j], g[:, j])(R) for j in range(mesh.n_theta)))


# -- problems --------------------------------------------------------------------------------

class _BaseProblem:
    """Family ``u_t`` over H^2 with ``u = 0`` inside and ``u = t`` outside."""

    surface = "H2"
    chart = None

    def __init__(self, domain, R_outer, H, mesh_params, newton_tol, max_iter=50):
        self.H = float(H)
        self.mesh = mesh_params.build(domain, R_outer)
        self.op = CmcOperator(self.mesh, H)
        self.inner = 0.0
        self.outer0 = 0.0
        self.family = DirichletFamily(self.op, self.inner, self.outer0, tol=newton_tol,
                                      max_iter=max_iter)

    def slopes(self, U):
        return _signed_slopes(self.mesh, U, self.chart)

    def surface_field(self, U, info):
        return ScalarField(self.mesh, U, info=info), None


class _EquidistantProblem(_BaseProblem):
    """Family over E_H described on H^2: ``u~ = w`` inside and ``w(R~_outer) + t`` outside."""

    surface = "E_H"

    def __init__(self, domain, R_outer, H, mesh_params, newton_tol, chart=None, max_iter=50):
        self.H = float(H)
        self.chart = chart if chart is not None else EquidistantChart(H)
        base = base_domain(domain, self.chart)
        self.eh_domain = domain
        self.mesh = mesh_params.build(base, float(self.chart.base_radius(R_outer)))
        self.op = CmcOperator(self.mesh, H)
        self.w_nodes = np.asarray(self.chart.w(self.mesh.r))
        self.inner = self.w_nodes[0]
        self.outer0 = float(self.w_nodes[-1, 0])
        self.family = DirichletFamily(self.op, self.inner, self.outer0, start=self.w_nodes,
                                      tol=newton_tol, max_iter=max_iter)

    def surface_field(self, U, info):
        base = ScalarField(self.mesh, U, info=info)
        radius = np.asarray(self.chart.eh_radius(self.mesh.r))
        return ScalarField(self.mesh, U - self.w_nodes, radius=radius, info=info), base


def base_domain(domain: StarDomain, chart: EquidistantChart) -> StarDomain:
    """Projection to H^2 of a star-shaped domain given by E_H radii."""

    def radius(th):
        return np.asarray(chart.base_radius(domain.rho(th)))

    def derivative(th):
        rt = radius(th)
        return domain.drho(th) / chart.meridian_speed(rt)

    return StarDomain(radius, derivative, label=f"base[{domain.label}]")


# -- single-height solve -------------------------------------------------------------------

def solve_dirichlet(domain: StarDomain, R_outer: float, t: float, H: float = 0.0,
                    mesh: MeshParams = MeshParams(), newton_tol: float = DEFAULT_NEWTON_TOL,
                    max_iter: int = 50) -> ScalarField:
    """Solve ``M_H(u) = 0`` over H^2 with ``u = 0`` inside and ``u = t`` on the outer circle.

    Newton starts from the guess linear in the normalized radius; if it fails the
    height is reached by predictor-corrector continuation from ``t = 0``.
    """
    _check_solver_H(H)
    t = float(t)
    if t < 0.0:
        raise ValueError("outer height must be >= 0")
    limit = height_limit(H)
    if t > limit:
        raise ValueError(f"outer height {t} exceeds the height bound {limit} for H={H}")
    pm = mesh.build(domain, R_outer)
    op = CmcOperator(pm, H)
    guess = np.outer(pm.phi, np.full(pm.n_theta, t))
    try:
        U, stats = newton_solve(op, guess, 0.0, t, newton_tol, max_iter)
        continued = False
    except NewtonError as exc:
        log.info("direct Newton failed (%s); continuing from t = 0", exc)
        fam = DirichletFamily(op, 0.0, 0.0, tol=newton_tol, max_iter=max_iter)
        U, stats = fam.solve(t)
        stats = NewtonStats(fam.newton_iterations, stats.residual_norm, stats.picard_steps)
        continued = True
    return ScalarField(pm, U, info={"t": t, "H": float(H), "newton_iters": stats.iterations,
                                    "residual_norm": stats.residual_norm, "continued": continued})


# -- slope search ----------------------------------------------------------------------------

def _monotone(search) -> bool:
    pts = sorted((t, s) for t, s in search if math.isfinite(s))
    return all(b[1] >= a[1] - 1e-12 for a, b in zip(pts, pts[1:]))


def _search(problem, s, tol, t_max, t_hint=None):
    """Outer height whose largest signed boundary slope equals ``s``."""
    record = []
    states = {}

    def evaluate(t):
        try:
            U, stats = problem.family.solve(t)
        except NewtonError as exc:
            log.info("no discrete solution reached at t=%.6g (%s); slope taken as infinite", t, exc)
            record.append((t, math.inf))
            return math.inf
        sig = float(problem.slopes(U)[0].max())
        states[t] = (U, stats)
        record.append((t, sig))
        return sig

    def done(t):
        return t, states[t][0], states[t][1], record

    lo, s_lo = 0.0, evaluate(0.0)
    if abs(s_lo - s) <= tol:
        return done(lo)
    if s_lo > s:
        raise BracketError(f"boundary slope {s_lo:.6g} at t=0 already exceeds s={s}",
                           0.0, s_lo, math.nan, math.nan)
    hi, s_hi = None, None
    probe = t_hint if t_hint is not None and 0.0 < t_hint < t_max else 0.5 * t_max
    prev, s_prev = lo, s_lo
    for _ in range(MAX_SEARCH_STEPS):
        sp = evaluate(probe)
        if abs(sp - s) <= tol:
            return done(probe)
        if sp > s:
            hi, s_hi = probe, sp
            break
        if probe >= t_max:
            raise BracketError(f"boundary slope {sp:.6g} at t_max={t_max:.6g} stays below s={s}",
                               0.0, record[0][1], t_max, sp)
        lo, s_lo = probe, sp
        # secant extrapolation through the last two points, with a safety factor
        step = (s - sp) * (probe - prev) / max(sp - s_prev, 1e-300) if sp > s_prev else math.inf
        nxt = probe + 1.5 * step
        nxt = max(nxt, probe + 0.05 * (t_max - probe))
        prev, s_prev = probe, sp
        probe = min(t_max, nxt)
    if hi is None:
        raise BracketError("bracket search exhausted its steps", 0.0, record[0][1], lo, s_lo)
    # Illinois regula falsi; bisection while the upper slope is infinite
    side = 0
    for _ in range(MAX_SEARCH_STEPS):
        if math.isinf(s_hi):
            t = 0.5 * (lo + hi)
        else:
            t = (lo * (s_hi - s) - hi * (s_lo - s)) / (s_hi - s_lo)
            if not lo < t < hi:
                t = 0.5 * (lo + hi)
        st = evaluate(t)
        if abs(st - s) <= tol:
            return done(t)
        if st < s:
            lo, s_lo = t, st
            if side == -1 and math.isfinite(s_hi):
                s_hi = s + 0.5 * (s_hi - s)
            side = -1
        else:
            hi, s_hi = t, st
            if side == 1:
                s_lo = s - 0.5 * (s - s_lo)
            side = 1
        if hi - lo <= 4e-16 * max(1.0, hi):
            break
    best = min((abs(v - s), t) for t, v in record if t in states)[1]
    log.warning("slope search stopped at bracket width %.3g; best mismatch %.3g",
                hi - lo, abs(dict(record)[best] - s))
    return done(best)


def _stage(problem, s, tol, t_hint, quad_tol=DEFAULT_QUAD_TOL) -> StageResult:
    H = problem.H
    t_max = height_limit(H, quad_tol)
    t, U, stats, record = _search(problem, s, tol, t_max, t_hint)
    signed, mag = problem.slopes(U)
    res = float(np.abs(problem.op.interior_residual(U)).max())
    info = {"t": t, "H": H, "s": s, "surface": problem.surface}
    fld, base = problem.surface_field(U, info)
    rep = SolveReport(t_star=t, sup_grad_inner=float(mag.max()), sup_u=fld.max(),
                      residual_norm=res, newton_iters=problem.family.newton_iterations,
                      mesh=problem.mesh.describe(), H=H, s=s, surface=problem.surface,
                      t_max=t_max, slope_error=float(mag.max() - s),
                      search=[[a, b] for a, b in record], slope_monotone=_monotone(record))
    if abs(rep.slope_error) > tol:
        log.warning("sup |grad u| = %.6g differs from s = %.6g: slopes of the other sign dominate",
                    rep.sup_grad_inner, s)
    return StageResult(problem.mesh.R_outer if problem.chart is None else
                       float(problem.chart.eh_radius(problem.mesh.R_outer)), t, fld, rep, base)


def find_t_for_slope(domain: StarDomain, R_outer: float, H: float, s: float,
                     tol: float = DEFAULT_SLOPE_TOL, mesh: MeshParams = MeshParams(),
                     newton_tol: float = DEFAULT_NEWTON_TOL, t_hint: float | None = None):
    """Outer height ``t*`` over H^2 whose solution has boundary slope ``s``.

    Returns ``(t_star, field, report)``.  The root is bracketed in ``[0, t_max]``
    (pi/4 for H = 0, B(H) otherwise) and refined by Illinois regula falsi.
    """
    _check_solver_H(H)
    s = _check_solver_slope(s)
    problem = _BaseProblem(domain, R_outer, H, mesh, newton_tol)
    st = _stage(problem, s, tol, t_hint)
    return st.t_star, st.field, st.report


def solve_on_equidistant(domain: StarDomain, H: float, s: float, R_outer: float,
                         tol: float = DEFAULT_SLOPE_TOL, mesh: MeshParams = MeshParams(),
                         newton_tol: float = DEFAULT_NEWTON_TOL,
                         chart: EquidistantChart | None = None,
                         t_hint: float | None = None) -> StageResult:
    """Graph over E_H (radii measured on E_H) vanishing inside with boundary slope ``s``.

    The base description ``u~`` solves ``M_H = 0`` over the projected annulus.  For
    ``s = 0`` the answer is E_H itself, returned exactly as ``u~ = w``.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"E_H solves need H in (0, 1), got {H!r}")
    s = _check_solver_slope(s)
    problem = _EquidistantProblem(domain, R_outer, H, mesh, newton_tol, chart)
    if s == 0.0:
        U = problem.w_nodes.copy()
        res = float(np.abs(problem.op.interior_residual(U)).max())
        info = {"t": 0.0, "H": H, "s": 0.0, "surface": problem.surface}
        fld, base = problem.surface_field(U, info)
        rep = SolveReport(t_star=0.0, sup_grad_inner=0.0, sup_u=0.0, residual_norm=res,
                          newton_iters=0, mesh=problem.mesh.describe(), H=H, s=0.0,
                          surface=problem.surface, t_max=height_limit(H))
        return StageResult(float(R_outer), 0.0, fld, rep, base)
    return _stage(problem, s, tol, t_hint)


# -- exhaustion ------------------------------------------------------------------------------

def barrier_slope(R0: float, H: float, chart: EquidistantChart | None = None):
    """Radial slope function of the vertical-tangent barrier around the disk of radius ``R0``."""
    if chart is None:
        prof = RadialProfile(CmcParams(R0, INFINITE, H))
        return lambda R: abs(float(prof.derivative(R)))
    f = barrier_f_R(R0, H, chart)
    return lambda R: abs(float(f.radial_derivative(R)))


def first_exhaustion_radius(R0: float, s: float, H: float = 0.0,
                            chart: EquidistantChart | None = None, r_cap: float = 60.0) -> float:
    """First radius beyond which the barrier around ``D_{R0}`` has slope at most ``s / 2``.

    For ``s = 0`` the condition never holds; ``R0 + 1`` is returned.
    """
    s = _check_solver_slope(s)
    if s == 0.0:
        return R0 + 1.0
    slope = barrier_slope(R0, H, chart)
    target = 0.5 * s
    a, step = R0, 1e-3
    b = R0 + step
    while slope(b) > target:
        a, step = b, 2.0 * step
        b = R0 + step
        if b > r_cap:
            raise ValueError(f"barrier slope stays above s/2 up to radius {r_cap}")
    if a == R0:
        a = R0 + 1e-12
        if slope(a) <= target:
            return a
    return brentq(lambda R: slope(R) - target, a, b, xtol=1e-12)


def exhaustion_schedule(R1: float, count: int, step: float = 1.0) -> list[float]:
    """Radii ``R_m = R_1 + m * step`` for ``m = 0 .. count - 1``."""
    if count < 1 or step <= 0.0:
        raise ValueError("need count >= 1 and a positive step")
    return [R1 + m * step for m in range(count)]


def _stage_change(old: StageResult, new: StageResult) -> float:
    """Max change on the older stage's nodes, interpolating the newer field along rays."""
    r_old = old.field.surface_radius
    r_new = new.field.surface_radius
    if old.field.mesh.n_theta != new.field.mesh.n_theta:
        raise ValueError("stages must share the angular grid")
    worst = 0.0
    for j in range(old.field.mesh.n_theta):
        spl = CubicSpline(r_new[:, j], new.field.values[:, j])
        worst = max(worst, float(np.abs(spl(r_old[:, j]) - old.field.values[:, j]).max()))
    return worst


def exterior_solve(domain: StarDomain, H: float, s: float, radii=None, *,
                   mesh: MeshParams = MeshParams(), newton_tol: float = DEFAULT_NEWTON_TOL,
                   slope_tol: float = DEFAULT_SLOPE_TOL, stage_tol: float = DEFAULT_STAGE_TOL,
                   surface: str = "H2", stages: int = 3, step: float = 1.0) -> ExteriorResult:
    """Slope-``s`` solutions on the truncations ``Omega ∩ D_{R_m}`` of an exterior domain.

    ``surface`` is ``"H2"`` (graphs over H^2) or ``"E_H"`` (graphs over the
    equidistant surface, radii measured on it; needs ``H > 0``).  Without ``radii``
    the schedule starts at :func:`first_exhaustion_radius`.
    """
    _check_solver_H(H)
    s = _check_solver_slope(s)
    if surface not in ("H2", "E_H"):
        raise ValueError(f"unknown surface {surface!r}")
    chart = EquidistantChart(H) if surface == "E_H" else None
    R0 = domain.enclosing_radius()
    R1 = first_exhaustion_radius(R0, s, H, chart)
    if radii is None:
        radii = exhaustion_schedule(R1, stages, step)
    radii = [float(R) for R in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("exhaustion radii must increase")
    if radii[0] < R1:
        raise ValueError(f"first exhaustion radius {radii[0]} is below R_1 = {R1:.6g}")
    results, changes = [], []
    hint = None
    for R in radii:
        if chart is None:
            problem = _BaseProblem(domain, R, H, mesh, newton_tol)
            st = _stage(problem, s, slope_tol, hint)
        else:
            st = solve_on_equidistant(domain, H, s, R, slope_tol, mesh, newton_tol, chart, hint)
        hint = st.t_star if st.t_star > 0.0 else None
        if results:
            changes.append(_stage_change(results[-1], st))
        results.append(st)
        log.info("stage R=%.4g: t*=%.10g, sup|grad|=%.10g", R, st.t_star, st.report.sup_grad_inner)
    final = results[-1].report
    report = SolveReport(**{**final.to_dict(), "stages": [], "stage_changes": []})
    report.stages = [{"R_outer": st.R_outer, "t_star": st.t_star,
                      "sup_grad_inner": st.report.sup_grad_inner, "sup_u": st.report.sup_u,
                      "residual_norm": st.report.residual_norm,
                      "newton_iters": st.report.newton_iters} for st in results]
    report.stage_changes = changes
    report.newton_iters = sum(st.report.newton_iters for st in results)
    report.converged = not changes or changes[-1] <= stage_tol
    if not report.converged and len(changes) > 1 and all(b >= a for a, b in zip(changes, changes[1:])):
        raise ExhaustionError(f"stage changes are not decreasing: {changes}", changes)
    return ExteriorResult(results, report)
