"""Adaptive quadrature helpers for integrands with an inverse-square-root endpoint.

The integrands handled here are written as functions of the offset ``delta``
from the singular endpoint.  Passing the offset (instead of the absolute
abscissa) lets callers evaluate ``1 - g`` through cancellation-free identities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

QUAD_LIMIT = 400
_TINY_ABS = 1e-15


class QuadratureError(ArithmeticError):
    """Raised when an integral cannot be evaluated to the requested tolerance."""


@dataclass(frozen=True)
class CertifiedIntegral:
    """Improper integral truncated at ``truncation`` with a rigorous tail bound."""

    value: float
    tail_bound: float
    truncation: float
    quad_error: float

    def __float__(self):
        return self.value


def _quad(func, a, b, rel_tol):
    if b <= a:
        return 0.0, 0.0
    val, err = integrate.quad(func, a, b, epsabs=_TINY_ABS, epsrel=rel_tol, limit=QUAD_LIMIT)
    if not math.isfinite(val):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]")
    return val, err


def integrate_offset(f: Callable[[float], float], d0: float, d1: float, rel_tol: float,
                     sqrt_substitution: bool = True) -> tuple[float, float]:
    """Integrate ``f(delta)`` for ``delta`` in ``[d0, d1]``.

    With ``sqrt_substitution`` the variable ``delta = u**2`` is used, which turns
    a ``delta**-1/2`` singularity at zero into a bounded integrand.
    """
    if d1 < d0:
        raise ValueError("integration limits out of order")
    if d1 == d0:
        return 0.0, 0.0
    if not sqrt_substitution:
        return _quad(f, d0, d1, rel_tol)

    def g(u):
        return 2.0 * u * f(u * u)

    return _quad(g, math.sqrt(d0), math.sqrt(d1), rel_tol)


def integrate_to_infinity(f: Callable[[float], float], tail_bound: Callable[[float], float],
                          rel_tol: float, *, start: float = 0.0, sqrt_substitution: bool = False,
                          tail_estimate: Callable[[float], float] | None = None,
                          first_cut: float = 8.0, max_cut: float = 300.0) -> CertifiedIntegral:
    """Integrate ``f(delta)`` over ``[start, inf)``.

    ``tail_bound(T)`` must bound ``|int_T^inf f|``; the truncation point is pushed out
    until that bound drops below ``rel_tol`` times the accumulated value (or an
    absolute floor when the value vanishes).  ``tail_estimate(T)``, if given, is
    added to the truncated integral and must lie within the bound of the true tail.
    """
    cut = start + first_cut
    head, err = integrate_offset(f, start, cut, rel_tol, sqrt_substitution)
    while True:
        bound = tail_bound(cut)
        target = rel_tol * max(abs(head), 1.0) * 0.1
        if bound <= target or bound == 0.0:
            break
        if cut >= max_cut:
            raise QuadratureError(f"tail bound {bound:.3e} above target at truncation {cut}")
        new_cut = min(cut + 8.0, max_cut)
        piece, e = integrate_offset(f, cut, new_cut, rel_tol, sqrt_substitution)
        head += piece
        err += e
        cut = new_cut
    tail = tail_estimate(cut) if tail_estimate is not None else 0.0
    return CertifiedIntegral(head + tail, bound, cut, err)


def sech_tail(T: float) -> float:
    """Exact value of int_T^inf sech(t) dt."""
    return 2.0 * math.atan(math.exp(-T))


def gauss_legendre_panels(f: Callable[[np.ndarray], np.ndarray], a, b, order: int = 12):
    """Vectorized fixed-order Gauss-Legendre over many short panels ``[a_k, b_k]``.

    Only meant for short panels of analytic integrands, where the rule is exact
    to rounding.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * x
    return half * np.sum(w * f(nodes), axis=-1)
