"""Hyperbolic-space primitives in the upper half-space model.

The hyperbolic Killing field is taken tangent to the z-axis, so its flow is
Euclidean scaling ``p -> e^t p`` and the totally geodesic base surface H^2 is
the unit upper hemisphere.  Points of H^2 are addressed by geodesic polar
coordinates ``(r, theta)`` about the pole ``o = (0, 0, 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeodesicPolarPoint:
    """Point of H^2 at geodesic distance ``r`` from ``o`` in direction ``theta``."""

    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise ValueError(f"geodesic radius must be finite and >= 0, got {self.r!r}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)


@dataclass(frozen=True)
class HalfSpacePoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not self.z > 0.0:
            raise ValueError(f"half-space points need z > 0, got z={self.z!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "HalfSpacePoint":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @property
    def euclidean_norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


def hemisphere_point(r, theta):
    """Vectorized ``to_half_space``: arrays of (x, y, z) on the unit hemisphere.

    Along a great semicircle through the pole the hyperbolic arclength is
    ``artanh(sin phi)``, hence ``sin phi = tanh r`` and ``cos phi = sech r``.
    """
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    th = np.tanh(r)
    sech = 1.0 / np.cosh(r)
    return np.stack(np.broadcast_arrays(th * np.cos(theta), th * np.sin(theta), sech), axis=-1)


def to_half_space(p: GeodesicPolarPoint) -> HalfSpacePoint:
    return HalfSpacePoint.from_array(hemisphere_point(p.r, p.theta))


def killing_flow(p: HalfSpacePoint, t: float) -> HalfSpacePoint:
    """Flow of the hyperbolic Killing field for time ``t``: ``e^t p``."""
    if not math.isfinite(t):
        raise ValueError("flow time must be finite")
    k = math.exp(t)
    return HalfSpacePoint(k * p.x, k * p.y, k * p.z)


def killing_norm(r):
    """Length of the Killing field at a point of H^2 at distance ``r`` from ``o``."""
    return np.cosh(r)


def model_norm(base, v):
    """Hyperbolic length of the Euclidean vector ``v`` attached at ``base``."""
    base = np.asarray(base, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.linalg.norm(v, axis=-1) / base[..., 2]


def model_inner(base, a, b):
    base = np.asarray(base, dtype=float)
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1) / base[..., 2] ** 2


def killing_field(p):
    """Killing vector at ``p`` in model coordinates; the flow is scaling, so X(p) = p."""
    return np.asarray(p, dtype=float).copy()


def distance_arrays(p, q):
    """Half-space distance for stacked (..., 3) arrays."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d2 = np.sum((p - q) ** 2, axis=-1)
    # arccosh(1 + x) written through log1p to keep precision for close points
    x = d2 / (2.0 * p[..., 2] * q[..., 2])
    return np.log1p(x + np.sqrt(x * (x + 2.0)))


def hyperbolic_distance(p: HalfSpacePoint, q: HalfSpacePoint) -> float:
    return float(distance_arrays(p.as_array(), q.as_array()))


def distance_to_pole(p: HalfSpacePoint) -> float:
    return hyperbolic_distance(p, HalfSpacePoint(0.0, 0.0, 1.0))


def polar_from_hemisphere(p) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`hemisphere_point` for points on (or radially projected to) H^2."""
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p, axis=-1, keepdims=True)
    rho = np.hypot(p[..., 0], p[..., 1])
    r = np.arctanh(np.clip(rho, 0.0, 1.0))
    theta = np.mod(np.arctan2(p[..., 1], p[..., 0]), TWO_PI)
    return r, theta


def signed_distance_to_base(p) -> np.ndarray:
    """Signed distance from ``p`` to the unit hemisphere (positive outside it)."""
    p = np.asarray(p, dtype=float)
    n2 = np.sum(p * p, axis=-1)
    return np.arcsinh((n2 - 1.0) / (2.0 * p[..., 2]))


def polar_frame(r, theta):
    """Unit radial and angular tangent vectors of H^2 at (r, theta), model coordinates."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sech = 1.0 / np.cosh(r)
    th = np.tanh(r)
    c, s = np.cos(theta), np.sin(theta)
    e_r = np.stack(np.broadcast_arrays(sech**2 * c, sech**2 * s, -sech * th), axis=-1)
    # d/dtheta has hyperbolic length sinh r; dividing leaves sech in front
    e_t = np.stack(np.broadcast_arrays(-sech * s, sech * c, 0.0 * r), axis=-1)
    return e_r, e_t
