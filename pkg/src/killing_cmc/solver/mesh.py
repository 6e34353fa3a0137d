"""Star-shaped exterior regions and the polar meshes laid over them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..geometry import TWO_PI

_FD_STEP = 1e-6


@dataclass(frozen=True)
class StarDomain:
    """Exterior of the star-shaped region ``{r < rho(theta)}`` of the base surface.

    ``radius`` and ``derivative`` take and return arrays.  Without an analytic
    derivative a centered difference is used.
    """

    radius: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    label: str = "star"

    def __post_init__(self):
        th = np.linspace(0.0, TWO_PI, 721)
        rho = np.asarray(self.radius(th), dtype=float)
        if not np.all(np.isfinite(rho)) or rho.min() <= 0.0:
            raise ValueError(f"inner radius of {self.label!r} must be positive and finite")
        if abs(rho[0] - rho[-1]) > 1e-9 * max(1.0, rho[0]):
            raise ValueError(f"inner radius of {self.label!r} is not 2*pi periodic")

    @classmethod
    def disk(cls, rho: float) -> "StarDomain":
        if not rho > 0.0:
            raise ValueError("disk radius must be positive")
        return cls(lambda th: np.full(np.shape(th), float(rho)),
                   lambda th: np.zeros(np.shape(th)), label=f"disk({rho:g})")

    @classmethod
    def ellipse(cls, a: float, b: float) -> "StarDomain":
        """Region bounded by ``r = ab / sqrt(b^2 cos^2 + a^2 sin^2)`` in geodesic polar coordinates."""
        if not (a > 0.0 and b > 0.0):
            raise ValueError("ellipse semi-axes must be positive")

        def radius(th):
            th = np.asarray(th, dtype=float)
            return a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2)

        def derivative(th):
            th = np.asarray(th, dtype=float)
            d = (b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2
            return -a * b * (a * a - b * b) * np.sin(th) * np.cos(th) / d**1.5

        return cls(radius, derivative, label=f"ellipse({a:g},{b:g})")

    def rho(self, theta):
        return np.asarray(self.radius(np.asarray(theta, dtype=float)), dtype=float)

    def drho(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.derivative is not None:
            return np.asarray(self.derivative(theta), dtype=float)
        return (self.rho(theta + _FD_STEP) - self.rho(theta - _FD_STEP)) / (2 * _FD_STEP)

    def enclosing_radius(self, samples: int = 4096) -> float:
        """Radius of the smallest disk about the origin containing the excluded region."""
        return float(self.rho(np.linspace(0.0, TWO_PI, samples, endpoint=False)).max())

    @property
    def is_radial(self) -> bool:
        th = np.linspace(0.0, TWO_PI, 97)
        rho = self.rho(th)
        return bool(np.ptp(rho) == 0.0)


def stretch_map(xi, beta: float):
    """Radial grading ``phi(xi) = expm1(beta xi) / expm1(beta)`` and its derivative (identity for beta = 0)."""
    xi = np.asarray(xi, dtype=float)
    if beta == 0.0:
        return xi.copy(), np.ones_like(xi)
    d = math.expm1(beta)
    return np.expm1(beta * xi) / d, beta * np.exp(beta * xi) / d


@dataclass(frozen=True, eq=False)
class PolarMesh:
    """Nodes ``r = rho(theta_j) + phi(xi_i) (R_outer - rho(theta_j))`` on a uniform (xi, theta) grid.

    ``stretch`` grades the radial nodes toward the inner boundary, where rotational
    profiles bend most; ``stretch=0`` gives the affine map.
    """

    domain: StarDomain
    R_outer: float
    n_r: int
    n_theta: int
    stretch: float = 0.0

    def __post_init__(self):
        if self.n_r < 4:
            raise ValueError("need at least 4 radial nodes")
        if self.n_theta < 1:
            raise ValueError("need at least one angular node")
        if not self.R_outer > self.domain.enclosing_radius():
            raise ValueError(f"outer radius {self.R_outer} does not enclose {self.domain.label}")
        theta = TWO_PI * np.arange(self.n_theta) / self.n_theta
        xi = np.linspace(0.0, 1.0, self.n_r)
        rho = self.domain.rho(theta)
        length = self.R_outer - rho
        phi, dphi = stretch_map(xi, self.stretch)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "dphi", dphi)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "r", rho[None, :] + phi[:, None] * length[None, :])

    def map(self, xi):
        return stretch_map(xi, self.stretch)

    @property
    def h_xi(self) -> float:
        return 1.0 / (self.n_r - 1)

    @property
    def h_theta(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def h(self) -> float:
        """Largest physical radial spacing."""
        return float(np.diff(self.r, axis=0).max())

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    def describe(self) -> dict:
        return {"n_r": self.n_r, "n_theta": self.n_theta, "R_outer": float(self.R_outer),
                "stretch": float(self.stretch), "h": self.h, "domain": self.domain.label}


@dataclass(eq=False)
class ScalarField:
    """Nodal values ``values[i, j]`` at radius index ``i`` and angle index ``j``.

    ``radius`` overrides the radii the values are attached to (geodesic radii on
    E_H for fields living there); by default they are the mesh radii.
    """

    mesh: PolarMesh
    values: np.ndarray
    radius: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.mesh.shape:
            raise ValueError(f"field shape {self.values.shape} != mesh shape {self.mesh.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")

    @property
    def surface_radius(self) -> np.ndarray:
        return self.mesh.r if self.radius is None else self.radius

    def max(self) -> float:
        return float(self.values.max())

    def angular_spread(self) -> float:
        """Largest variation across angles at fixed radial index."""
        return float(np.ptp(self.values, axis=1).max())

    def rows(self):
        """Iterate ``(theta, r, u)`` over all nodes, angle-major within each radius."""
        r = self.surface_radius
        for i in range(self.mesh.n_r):
            for j in range(self.mesh.n_theta):
                yield self.mesh.theta[j], r[i, j], self.values[i, j]


def uniform_theta(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


__all__ = ["PolarMesh", "ScalarField", "StarDomain", "uniform_theta"]
