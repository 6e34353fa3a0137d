"""Rotational CMC Killing graphs over H^2 and the height bounds built from them.

A rotational profile ``f(r)`` starting at the circle ``r = rho`` with slope ``s``
is encoded by the auxiliary slope function

    g(t) = cosh(t) f'(t) / sqrt(1 + cosh(t)^2 f'(t)^2) = H coth(2t) + C cosech(2t),

and recovered by one quadrature of ``g / (cosh t sqrt(1 - g^2))``.  Everything
below evaluates ``1 - g`` through the identities

    sinh 2t - sinh 2rho = 2 cosh(t + rho) sinh(t - rho)
    cosh 2t - cosh 2rho = 2 sinh(t + rho) sinh(t - rho)

so the vertical-tangent case ``s = inf`` (where ``g(rho) = 1``) stays accurate.
"""
from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass
from typing import Union

import numpy as np

from .quadrature import (CertifiedIntegral, QuadratureError, integrate_offset,
                         integrate_to_infinity, sech_tail)

DEFAULT_QUAD_TOL = 1e-10


class ProfileDomainError(ValueError):
    """Parameters outside the regime where the profile integral is defined."""


class InfiniteSlope:
    """Tag for the vertical boundary slope ``s = inf``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __str__(self):
        return "inf"

    def __float__(self):
        return math.inf

    def __reduce__(self):
        return (InfiniteSlope, ())


INFINITE = InfiniteSlope()
Slope = Union[float, InfiniteSlope]


def is_infinite(s) -> bool:
    return s is INFINITE


def parse_slope(token) -> Slope:
    """Read a slope from user input; ``inf``/``infinity`` map to :data:`INFINITE`."""
    if isinstance(token, InfiniteSlope):
        return token
    if isinstance(token, str) and token.strip().lower() in ("inf", "infinity", "+inf"):
        return INFINITE
    value = float(token)
    if math.isinf(value) and value > 0:
        return INFINITE
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"slope must be >= 0 or 'inf', got {token!r}")
    return value


def _check_rho(rho):
    if not (rho > 0.0 and math.isfinite(rho)):
        raise ProfileDomainError(f"rho must be a positive finite length, got {rho!r}")


def _check_H(H):
    if not (-1.0 < H < 1.0):
        raise ProfileDomainError(f"H must lie in the open interval (-1, 1), got {H!r}")


def _boundary_sine(rho: float, s: Slope) -> tuple[float, float]:
    """Return ``(sigma, 1 - sigma)`` with ``sigma = g(rho) = cosh(rho) s / sqrt(1 + cosh(rho)^2 s^2)``."""
    if is_infinite(s):
        return 1.0, 0.0
    cs = math.cosh(rho) * s
    root = math.hypot(1.0, cs)
    return cs / root, 1.0 / (root * (root + cs))


@dataclass(frozen=True)
class CmcParams:
    """Rotational profile data: inner radius, boundary slope, mean curvature."""

    rho: float
    s: Slope
    H: float

    def __post_init__(self):
        _check_rho(self.rho)
        object.__setattr__(self, "s", parse_slope(self.s))
        _check_H(self.H)

    @property
    def infinite_slope(self) -> bool:
        return is_infinite(self.s)


def coefficient_C(rho: float, s: Slope, H: float) -> float:
    """Integration constant fixing ``f'(rho) = s`` in ``g(t) sinh 2t = H cosh 2t + C``."""
    _check_rho(rho)
    _check_H(H)
    s = parse_slope(s)
    if is_infinite(s):
        return -H * math.cosh(2 * rho) + math.sinh(2 * rho)
    c = math.cosh(rho)
    return -H * math.cosh(2 * rho) + math.sinh(2 * rho) * c * s / math.sqrt(1.0 + c * c * s * s)


def _boundary_terms(p: CmcParams) -> tuple[float, float]:
    """``(C + H cosh 2rho, sinh 2rho - C - H cosh 2rho)``, i.e. ``sigma sinh 2rho`` and ``(1 - sigma) sinh 2rho``.

    Both are read off :func:`coefficient_C`; when it agrees with the boundary
    sine to rounding, the cancellation-free values are substituted so that
    ``g(rho) = 1`` holds exactly for ``s = inf``.
    """
    rho, H = p.rho, p.H
    s2r, c2r = math.sinh(2.0 * rho), math.cosh(2.0 * rho)
    C = coefficient_C(rho, p.s, H)
    K = C + H * c2r
    sigma, one_minus_sigma = _boundary_sine(rho, p.s)
    if abs(K - sigma * s2r) <= 16.0 * np.finfo(float).eps * (abs(H) * c2r + s2r):
        return sigma * s2r, one_minus_sigma * s2r
    return K, s2r - K


def _pieces(delta, p: CmcParams, terms=None):
    """Numerator of g and the two factors of 1 - g^2, each multiplied by sinh 2t."""
    rho, H = p.rho, p.H
    K, excess = terms if terms is not None else _boundary_terms(p)
    delta = np.asarray(delta, dtype=float)
    sd = np.sinh(delta)
    a = 2.0 * rho + delta
    num = 2.0 * H * np.sinh(a) * sd + K
    one_minus = 2.0 * sd * (np.cosh(a) - H * np.sinh(a)) + excess
    den = np.sinh(2.0 * (rho + delta))
    return num, one_minus, den + num, den


def slope_g(t, params: CmcParams):
    """The auxiliary slope ``g(t)``; raises when ``|g| > 1`` (no graph there)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < params.rho):
        raise ProfileDomainError("slope_g needs t >= rho")
    num, one_minus, one_plus, den = _pieces(t_arr - params.rho, params)
    if np.any(one_minus < 0.0) or np.any(one_plus < 0.0):
        raise ProfileDomainError(f"|g| exceeds 1 for {params}")
    g = num / den
    return float(g) if np.ndim(g) == 0 else g


def _integrand(params: CmcParams):
    rho = params.rho
    terms = _boundary_terms(params)

    def f(delta):
        num, one_minus, one_plus, _ = _pieces(delta, params, terms)
        if one_minus <= 0.0 or one_plus <= 0.0:
            if delta == 0.0 and one_minus == 0.0:
                # removable under the sqrt substitution (the caller multiplies by 2u = 0)
                return 0.0
            raise ProfileDomainError(f"|g| reaches 1 at t = {rho + delta} for {params}")
        return float(num / (math.cosh(rho + delta) * math.sqrt(one_minus) * math.sqrt(one_plus)))

    return f


def profile_value(r: float, params: CmcParams, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Height ``f(r)`` of the rotational profile, ``f(rho) = 0``."""
    if r < params.rho:
        raise ProfileDomainError(f"profile defined for r >= rho = {params.rho}, got {r}")
    val, _ = integrate_offset(_integrand(params), 0.0, r - params.rho, quad_tol)
    return val


def profile_derivative(r: float, params: CmcParams):
    """``f'(r) = g / (cosh r sqrt(1 - g^2))``; :data:`INFINITE` at ``r = rho`` when ``s = inf``."""
    if r < params.rho:
        raise ProfileDomainError(f"profile defined for r >= rho = {params.rho}, got {r}")
    num, one_minus, one_plus, _ = _pieces(r - params.rho, params)
    if one_minus == 0.0:
        if r == params.rho and params.infinite_slope:
            return INFINITE
        raise ProfileDomainError(f"vertical tangent at r = {r} > rho")
    if one_minus < 0.0 or one_plus <= 0.0:
        raise ProfileDomainError(f"|g| exceeds 1 at r = {r}")
    return float(num / (math.cosh(r) * math.sqrt(one_minus) * math.sqrt(one_plus)))


def profile_derivatives(r, params: CmcParams) -> np.ndarray:
    """Vectorized ``f'``; returns ``+inf`` where the tangent is vertical."""
    r = np.asarray(r, dtype=float)
    num, one_minus, one_plus, _ = _pieces(r - params.rho, params)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / (np.cosh(r) * np.sqrt(one_minus) * np.sqrt(one_plus))
    out = np.where(one_minus == 0.0, np.inf, out)
    if np.any(np.isnan(out)):
        raise ProfileDomainError(f"|g| exceeds 1 for {params}")
    return out


def _profile_tail_bound(params: CmcParams):
    C = coefficient_C(params.rho, params.s, params.H)

    def bound(delta):
        t = params.rho + delta
        G = abs(params.H) / math.tanh(2 * t) + abs(C) / math.sinh(2 * t)
        if G >= 1.0:
            return math.inf
        return G / math.sqrt(1.0 - G * G) * sech_tail(t)

    def estimate(delta):
        H = params.H
        return H / math.sqrt(1.0 - H * H) * sech_tail(params.rho + delta)

    return bound, estimate


def asymptotic_height_certified(params: CmcParams, quad_tol: float = DEFAULT_QUAD_TOL) -> CertifiedIntegral:
    if not 0.0 <= params.H < 1.0:
        raise ProfileDomainError("asymptotic height is only asserted for H in [0, 1)")
    bound, estimate = _profile_tail_bound(params)
    return integrate_to_infinity(_integrand(params), bound, quad_tol,
                                 sqrt_substitution=True, tail_estimate=estimate)


def asymptotic_height(params: CmcParams, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """``lim_{r -> inf} f(r)``: supremum of the profile for ``H`` in ``[0, 1)``."""
    return asymptotic_height_certified(params, quad_tol).value


def limit_slope(t, H):
    """``H + (1 - H) e^{-2t}``, the ``rho -> inf`` limit of the shifted vertical-tangent slope."""
    return H + (1.0 - H) * np.exp(-2.0 * np.asarray(t, dtype=float))


def shifted_slope(t, rho, H):
    """Slope function of the ``s = inf`` profile written from its boundary: ``g(rho + t)``."""
    t = np.asarray(t, dtype=float)
    return (H * np.cosh(2 * rho + 2 * t) + math.sinh(2 * rho) - H * math.cosh(2 * rho)) / np.sinh(2 * rho + 2 * t)


def height_bound_B_certified(H: float, quad_tol: float = DEFAULT_QUAD_TOL) -> CertifiedIntegral:
    if not 0.0 <= H < 1.0:
        raise ProfileDomainError(f"B(H) needs H in the half-open interval [0, 1), got {H!r}")

    def f(t):
        e = math.exp(-2.0 * t)
        x = H + (1.0 - H) * e
        one_minus = (1.0 - H) * -math.expm1(-2.0 * t)
        if one_minus == 0.0:
            return 0.0
        return x / (math.cosh(t) * math.sqrt(one_minus * (1.0 + x)))

    def bound(T):
        x = H + (1.0 - H) * math.exp(-2.0 * T)
        return x / math.sqrt(1.0 - x * x) * sech_tail(T)

    def estimate(T):
        return H / math.sqrt(1.0 - H * H) * sech_tail(T)

    return integrate_to_infinity(f, bound, quad_tol, sqrt_substitution=True, tail_estimate=estimate)


def height_bound_B(H: float, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Uniform height bound for vertical-tangent profiles of mean curvature ``H``."""
    return height_bound_B_certified(H, quad_tol).value


def equidistant_slope(t, H):
    """Slope function of the equidistant surface's height: ``H tanh t`` (= H(coth 2t - cosech 2t))."""
    return H * np.tanh(np.asarray(t, dtype=float))


def equidistant_integrand(t, H):
    """Derivative of ``w``; vectorized over ``t``."""
    ht = H * np.tanh(np.asarray(t, dtype=float))
    return ht / (np.cosh(t) * np.sqrt((1.0 - ht) * (1.0 + ht)))


def equidistant_height_certified(r: float, H: float, quad_tol: float = DEFAULT_QUAD_TOL) -> CertifiedIntegral:
    if r < 0.0:
        raise ProfileDomainError("w is defined for r >= 0")
    _check_H(H)
    if H == 0.0:
        return CertifiedIntegral(0.0, 0.0, r, 0.0)

    def f(t):
        return float(equidistant_integrand(t, H))

    def bound(T):
        return abs(H) / math.sqrt(1.0 - H * H) * sech_tail(T)

    res = integrate_to_infinity(f, bound, quad_tol, start=r, sqrt_substitution=False)
    return CertifiedIntegral(-res.value, res.tail_bound, res.truncation, res.quad_error)


def equidistant_height_w(r: float, H: float, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Height ``w(r)`` over H^2 of the equidistant surface of mean curvature ``H``."""
    return equidistant_height_certified(r, H, quad_tol).value


def _catenoid_integrand(rho):
    sr = math.sinh(rho)

    def f(t):
        if t == 0.0:
            return 0.0
        # sinh^2(t + rho) - sinh^2(rho) = sinh(t + 2 rho) sinh(t)
        return sr / math.sqrt(math.sinh(t + 2.0 * rho) * math.sinh(t))

    return f


def catenoid_h2r(r: float, rho: float, quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Height at distance ``r`` from the neck of the minimal catenoid of H^2 x R with neck radius ``rho``."""
    if not (r > 0.0 and rho > 0.0):
        raise ProfileDomainError("catenoid_h2r needs r > 0 and rho > 0")
    val, _ = integrate_offset(_catenoid_integrand(rho), 0.0, r, quad_tol)
    return val


def catenoid_limit_certified(rho: float, quad_tol: float = DEFAULT_QUAD_TOL) -> CertifiedIntegral:
    if not rho > 0.0:
        raise ProfileDomainError("rho must be positive")
    sr = math.sinh(rho)

    def bound(T):
        # integrand <= sinh(rho) / sinh(t); int_T^inf cosech = -log tanh(T/2)
        return sr * -math.log1p(-2.0 / (math.exp(T) + 1.0))

    return integrate_to_infinity(_catenoid_integrand(rho), bound, quad_tol, sqrt_substitution=True)


class RadialProfile:
    """Evaluator for ``f`` and ``f'`` of one rotational profile, caching computed nodes.

    Values at new radii are integrated from the nearest cached node below, so a
    sweep over increasing radii costs one short panel per point.  The cache is
    guarded by a lock.
    """

    def __init__(self, params: CmcParams, quad_tol: float = DEFAULT_QUAD_TOL):
        self.params = params
        self.quad_tol = quad_tol
        self._f = _integrand(params)
        self._radii = [params.rho]
        self._values = [0.0]
        self._lock = threading.Lock()

    def _value_locked(self, r):
        k = bisect.bisect_right(self._radii, r) - 1
        r0, f0 = self._radii[k], self._values[k]
        if r == r0:
            return f0
        rho = self.params.rho
        piece, _ = integrate_offset(self._f, r0 - rho, r - rho, self.quad_tol)
        val = f0 + piece
        self._radii.insert(k + 1, r)
        self._values.insert(k + 1, val)
        return val

    def value(self, r: float) -> float:
        if r < self.params.rho:
            raise ProfileDomainError(f"profile defined for r >= rho = {self.params.rho}, got {r}")
        with self._lock:
            return self._value_locked(float(r))

    def values(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < self.params.rho):
            raise ProfileDomainError("radii below rho")
        uniq, inv = np.unique(r.ravel(), return_inverse=True)
        with self._lock:
            out = np.array([self._value_locked(float(x)) for x in uniq])
        return out[inv].reshape(r.shape)

    def derivative(self, r: float):
        return profile_derivative(r, self.params)

    def derivatives(self, r) -> np.ndarray:
        return profile_derivatives(r, self.params)

    def asymptote(self) -> CertifiedIntegral:
        return asymptotic_height_certified(self.params, self.quad_tol)

    def __call__(self, r):
        return self.values(r) if np.ndim(r) else self.value(float(r))


__all__ = [
    "CmcParams", "INFINITE", "InfiniteSlope", "ProfileDomainError", "QuadratureError", "RadialProfile",
    "asymptotic_height", "catenoid_h2r", "coefficient_C", "equidistant_height_w", "height_bound_B",
    "parse_slope", "profile_derivative", "profile_value", "slope_g",
]
