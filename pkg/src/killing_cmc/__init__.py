"""Constant-mean-curvature Killing graphs over exterior domains of hyperbolic space.

Rotational profiles and height bounds by quadrature, graphs over equidistant
surfaces, and a finite-volume solver with boundary-slope continuation and domain
exhaustion.
"""
from .equidistant import (EquidistantChart, EquidistantRadialGraph, barrier_f_R, gradient_transform,
                          lift_gradient, project_to_base, radius_map, transform_from_base,
                          transform_to_base, w_hat)
from .geometry import (GeodesicPolarPoint, HalfSpacePoint, hyperbolic_distance, killing_flow,
                       killing_norm, to_half_space)
from .profiles import (INFINITE, CmcParams, ProfileDomainError, RadialProfile, asymptotic_height,
                       catenoid_h2r, coefficient_C, equidistant_height_w, height_bound_B,
                       parse_slope, profile_derivative, profile_value, slope_g)
from .solver import (BracketError, ExhaustionError, MeshParams, NewtonError, PolarMesh,
                     ScalarField, SolveReport, StarDomain, barrier_check, boundary_gradient_sup,
                     exterior_solve, find_t_for_slope, residual_MH, solve_dirichlet,
                     solve_on_equidistant)

__version__ = "0.1.0"
