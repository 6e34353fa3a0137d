"""Graphs over the equidistant surface E_H and their description over H^2.

E_H (0 < H < 1) is the Killing graph of the radial function ``w`` over H^2, so a
point of E_H is stored as its base point plus the flow time ``w(r~)``.  The
chart tabulates ``w`` and the map between base radius ``r~`` and geodesic
radius ``R`` measured inside E_H; between table nodes both are completed by a
short Gauss-Legendre panel, which is exact to rounding for these integrands.
"""
from __future__ import annotations

import math
import threading

import numpy as np
from . import geometry as geo
from .profiles import (DEFAULT_QUAD_TOL, INFINITE, CmcParams, ProfileDomainError, RadialProfile,
                       Slope, equidistant_height_certified, equidistant_integrand, is_infinite,
                       parse_slope)
from .quadrature import gauss_legendre_panels

_BISECTION_STEPS = 52


class EquidistantChart:
    """Radius tables and height function of E_H for one ``H`` in (0, 1).

    Construction fills the tables (single writer); afterwards lookups only read,
    except for on-demand extension beyond ``r_max`` which takes a lock.
    """

    def __init__(self, H: float, quad_tol: float = DEFAULT_QUAD_TOL, spacing: float = 0.05,
                 r_max: float = 12.0):
        if not 0.0 < H < 1.0:
            raise ValueError(f"E_H charts need H in (0, 1), got {H!r}")
        self.H = float(H)
        self.quad_tol = quad_tol
        self.spacing = spacing
        self._lock = threading.Lock()
        n = int(math.ceil(r_max / spacing)) + 1
        self._r = spacing * np.arange(n)
        w_end = equidistant_height_certified(self._r[-1], H, quad_tol).value
        dw = gauss_legendre_panels(self.w_prime, self._r[:-1], self._r[1:])
        self._w = w_end - np.concatenate([np.cumsum(dw[::-1])[::-1], [0.0]])
        dR = gauss_legendre_panels(self.meridian_speed, self._r[:-1], self._r[1:])
        self._R = np.concatenate([[0.0], np.cumsum(dR)])

    def _extend(self, r_needed: float):
        with self._lock:
            if self._r[-1] >= r_needed:
                return
            n_new = int(math.ceil((r_needed - self._r[-1]) / self.spacing)) + 1
            r_new = self._r[-1] + self.spacing * np.arange(1, n_new + 1)
            a = np.concatenate([[self._r[-1]], r_new[:-1]])
            w_new = self._w[-1] + np.cumsum(gauss_legendre_panels(self.w_prime, a, r_new))
            # meridian_speed reads w, so the w table must be extended first
            self._w = np.concatenate([self._w, w_new])
            self._r = np.concatenate([self._r, r_new])
            R_new = self._R[-1] + np.cumsum(gauss_legendre_panels(self.meridian_speed, a, r_new))
            self._R = np.concatenate([self._R, R_new])

    @property
    def r_max(self) -> float:
        return float(self._r[-1])

    # -- height function of E_H over H^2 ---------------------------------------------------
    def w_prime(self, r):
        return equidistant_integrand(r, self.H)

    def _from_table(self, name, f, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radii must be >= 0")
        if r.size and r.max() > self.r_max:
            self._extend(float(r.max()))
        table = getattr(self, name)
        k = np.minimum((r / self.spacing).astype(int), len(self._r) - 1)
        base = self._r[k]
        out = table[k] + gauss_legendre_panels(f, base, r)
        return float(out) if out.ndim == 0 else out

    def w(self, r):
        """Height of E_H above the base point at distance ``r`` (negative, increasing to 0)."""
        return self._from_table("_w", self.w_prime, r)

    # -- meridian of E_H ------------------------------------------------------------------
    def meridian_speed(self, r):
        """Hyperbolic speed ``|gamma'|_E / z`` of the E_H meridian parametrized by base radius."""
        r = np.asarray(r, dtype=float)
        wp = self.w_prime(r)
        sech = 1.0 / np.cosh(r)
        th = np.tanh(r)
        # gamma(r) = phi_{w(r)}(tanh r, 0, sech r); the scale factor e^{w} of the flow
        # multiplies both |gamma'|_E and z, so it is left out
        dx = wp * th + sech**2
        dz = wp * sech - sech * th
        z = sech
        return np.hypot(dx, dz) / z

    def eh_radius(self, r):
        """Geodesic radius on E_H of the point lying over base radius ``r``."""
        return self._from_table("_R", self.meridian_speed, r)

    def base_radius(self, R):
        """Inverse of :meth:`eh_radius` by bracketed bisection inside one table panel."""
        R = np.asarray(R, dtype=float)
        if np.any(R < 0):
            raise ValueError("E_H radii must be >= 0")
        while R.size and R.max() > self._R[-1]:
            self._extend(self.r_max + max(1.0, float(R.max() - self._R[-1])))
        k = np.clip(np.searchsorted(self._R, R, side="right") - 1, 0, len(self._R) - 2)
        lo = self._r[k].astype(float)
        hi = self._r[k + 1].astype(float)
        lo, hi = np.broadcast_arrays(lo, hi)
        lo, hi = lo.copy(), hi.copy()
        for _ in range(_BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            below = self._R[k] + gauss_legendre_panels(self.meridian_speed, self._r[k], mid) < R
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = np.where(R == 0.0, 0.0, 0.5 * (lo + hi))
        return float(out) if out.ndim == 0 else out

    # -- points ---------------------------------------------------------------------------
    def base_point(self, r, theta):
        return geo.hemisphere_point(r, theta)

    def lift(self, r, theta):
        """Point of E_H over the base point (r, theta): ``phi_{w(r)}`` applied to it."""
        p = geo.hemisphere_point(r, theta)
        return np.exp(np.asarray(self.w(r)))[..., None] * p

    def eh_point(self, R, theta):
        """Model coordinates of the E_H point with intrinsic polar coordinates (R, theta)."""
        return self.lift(self.base_radius(R), theta)


def project_to_base(p: geo.HalfSpacePoint) -> geo.HalfSpacePoint:
    """Base point of H^2 on the Killing orbit through ``p``."""
    n = p.euclidean_norm
    return geo.HalfSpacePoint(p.x / n, p.y / n, p.z / n)


def radius_map(R, chart: EquidistantChart):
    """Base radius of the disk cut on H^2 by the Killing cylinder over the E_H disk of radius ``R``."""
    return chart.base_radius(R)


def transform_to_base(u, chart: EquidistantChart):
    """Function ``u(R, theta)`` on E_H to ``u~(r, theta) = u(lift) + w(r)`` on H^2 (same Killing graph)."""

    def u_tilde(r, theta):
        return u(chart.eh_radius(r), theta) + chart.w(r)

    return u_tilde


def transform_from_base(u_tilde, chart: EquidistantChart):
    def u(R, theta):
        r = chart.base_radius(R)
        return u_tilde(r, theta) - chart.w(r)

    return u


def _base_data(base_point, chart):
    base_point = np.asarray(base_point, dtype=float)
    r, theta = geo.polar_from_hemisphere(base_point)
    w = np.asarray(chart.w(r))
    e_r, _ = geo.polar_frame(r, theta)
    grad_w = np.asarray(chart.w_prime(r))[..., None] * e_r
    x = np.exp(w)[..., None] * base_point
    return r, w, grad_w, x


def gradient_transform(grad_u, base_point, chart: EquidistantChart):
    """Gradient of ``u~`` at the base point from the gradient of ``u`` at its lift.

    ``grad_u`` is a model-coordinate vector tangent to E_H at ``x = phi_w(x~)``.
    Returns ``<grad u, X> grad w + [D phi_w]^{-1} pi(grad u) + grad w``, with
    ``pi`` the orthogonal projection onto ``X^perp`` in the model metric.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    r, w, grad_w, x = _base_data(base_point, chart)
    X = geo.killing_field(x)
    along = geo.model_inner(x, grad_u, X)
    proj = grad_u - (along / geo.model_inner(x, X, X))[..., None] * X
    # D phi_w is Euclidean scaling by e^w
    return along[..., None] * grad_w + np.exp(-w)[..., None] * proj + grad_w


def lift_gradient(grad_u_tilde, base_point, chart: EquidistantChart):
    """Inverse of :func:`gradient_transform`: gradient on E_H from the base gradient."""
    grad_u_tilde = np.asarray(grad_u_tilde, dtype=float)
    r, w, grad_w, x = _base_data(base_point, chart)
    xt = np.asarray(base_point, dtype=float)
    b = grad_u_tilde - grad_w
    c2 = np.cosh(r) ** 2
    gw_b = geo.model_inner(xt, grad_w, b)
    gw2 = geo.model_inner(xt, grad_w, grad_w)
    lam = gw_b / (1.0 + c2 * gw2)
    a = b - (c2 * lam)[..., None] * grad_w
    X = geo.killing_field(x)
    return lam[..., None] * X + np.exp(w)[..., None] * a


def equidistant_slope_from_base(du_dr, du_orth, r, chart: EquidistantChart):
    """``|grad u|`` on E_H from orthonormal-frame components of ``grad u~`` at base radius ``r``."""
    wp = chart.w_prime(r)
    b_r = du_dr - wp
    return np.sqrt(b_r**2 / (1.0 + np.cosh(r) ** 2 * wp**2) + np.asarray(du_orth) ** 2)


def w_hat(R, chart: EquidistantChart):
    """Height of H^2 as a Killing graph over E_H, at E_H radius ``R``."""
    return -np.asarray(chart.w(chart.base_radius(R))) if np.ndim(R) else -chart.w(chart.base_radius(R))


class EquidistantRadialGraph:
    """Radial CMC-H graph over E_H vanishing on the circle of E_H radius ``R`` with slope ``s``.

    Over H^2 the same surface is ``v_{R~, s~, H} + w(R~)`` with ``R~`` the projected
    radius and ``s~`` the matching base slope; ``s = inf`` gives the barrier ``f_R``.
    """

    def __init__(self, R: float, chart: EquidistantChart, s: Slope = INFINITE,
                 quad_tol: float = DEFAULT_QUAD_TOL):
        if not R > 0.0:
            raise ValueError("inner E_H radius must be positive")
        self.R = float(R)
        self.chart = chart
        self.s = parse_slope(s)
        self.base_inner = float(chart.base_radius(self.R))
        if is_infinite(self.s):
            base_slope = INFINITE
        else:
            rt = self.base_inner
            base_slope = self.s * float(chart.meridian_speed(rt)) + float(chart.w_prime(rt))
        self.base_slope = base_slope
        self.profile = RadialProfile(CmcParams(self.base_inner, base_slope, chart.H), quad_tol)
        self._w_inner = chart.w(self.base_inner)

    def parts(self, R_eh):
        """``(v1, v2)`` with ``f = v1 - v2``: lifted profile and ``w^(R) - w^(x)``."""
        R_eh = np.asarray(R_eh, dtype=float)
        if np.any(R_eh < self.R):
            raise ProfileDomainError("barrier evaluated inside its disk")
        r = np.asarray(self.chart.base_radius(R_eh))
        v1 = self.profile.values(np.maximum(r, self.base_inner))
        v2 = np.asarray(self.chart.w(r)) - self._w_inner
        return v1, v2

    def __call__(self, R_eh):
        v1, v2 = self.parts(R_eh)
        out = v1 - v2
        return float(out) if out.ndim == 0 else out

    def base_values(self, r):
        """The same graph written over H^2: ``v(r) + w(R~)``."""
        return self.profile.values(r) + self._w_inner

    def radial_derivative(self, R_eh):
        """Derivative along E_H radii, ``(v' - w') dr~/dR``."""
        R_eh = np.asarray(R_eh, dtype=float)
        r = np.asarray(self.chart.base_radius(R_eh))
        out = (self.profile.derivatives(r) - self.chart.w_prime(r)) / self.chart.meridian_speed(r)
        return float(out) if out.ndim == 0 else out

    def asymptote(self) -> float:
        return self.profile.asymptote().value + self._w_inner


def barrier_f_R(R_eh: float, H: float, chart: EquidistantChart,
                quad_tol: float = DEFAULT_QUAD_TOL) -> EquidistantRadialGraph:
    """Vertical-tangent radial barrier over E_H outside the disk of E_H radius ``R_eh``."""
    if not math.isclose(H, chart.H, rel_tol=0, abs_tol=1e-15):
        raise ValueError(f"chart built for H={chart.H}, barrier requested for H={H}")
    return EquidistantRadialGraph(R_eh, chart, INFINITE, quad_tol)
