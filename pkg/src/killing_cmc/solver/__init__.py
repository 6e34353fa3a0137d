"""Finite-volume CMC solver on polar meshes over exterior star-shaped domains."""
from .barriers import BarrierReport, barrier_check
from .continuation import (DEFAULT_NEWTON_TOL, DEFAULT_SLOPE_TOL, DEFAULT_STAGE_TOL,
                           DEFAULT_STRETCH, BracketError, ExhaustionError, ExteriorResult,
                           MeshParams, SolveReport, StageResult, base_domain, barrier_slope,
                           boundary_gradient_sup, exhaustion_schedule, exterior_solve,
                           find_t_for_slope, first_exhaustion_radius, gradient_on_circle,
                           height_limit, residual_MH, solve_dirichlet, solve_on_equidistant)
from .mesh import PolarMesh, ScalarField, StarDomain, stretch_map, uniform_theta
from .newton import DirichletFamily, NewtonError, NewtonStats, newton_solve, solution_tangent
from .operator import CmcOperator, gradient_norm, nodal_gradient

__all__ = [
    "BarrierReport", "BracketError", "CmcOperator", "DEFAULT_NEWTON_TOL", "DEFAULT_SLOPE_TOL",
    "DEFAULT_STAGE_TOL", "DEFAULT_STRETCH", "DirichletFamily", "ExhaustionError",
    "ExteriorResult", "MeshParams", "NewtonError", "NewtonStats", "PolarMesh", "ScalarField",
    "SolveReport", "StageResult", "StarDomain", "barrier_check", "barrier_slope", "base_domain",
    "boundary_gradient_sup", "exhaustion_schedule", "exterior_solve", "find_t_for_slope",
    "first_exhaustion_radius", "gradient_norm", "gradient_on_circle", "height_limit",
    "newton_solve", "nodal_gradient", "residual_MH", "solution_tangent", "solve_dirichlet",
    "solve_on_equidistant", "stretch_map", "uniform_theta",
]
