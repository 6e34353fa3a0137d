"""Sandwich check of a solved field between its radial barriers."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..equidistant import EquidistantChart, barrier_f_R
from ..profiles import INFINITE, CmcParams, RadialProfile
from .mesh import ScalarField


@dataclass
class BarrierReport:
    """Worst violations (positive means violated) of the barrier inequalities.

    ``lower`` is ``b - (b(R_outer) + t) <= u`` and ``upper`` is ``u <= t``, with ``b``
    the vertical-tangent barrier around the disk of radius ``R0``.  ``sharp_lower``
    is the translated barrier ``b - b(R_outer) + t <= u``, which matches ``u`` on the
    outer circle; it is reported as a diagnostic and does not enter ``passed``.
    """

    lower: float
    upper: float
    sharp_lower: float
    tolerance: float
    nodes_checked: int
    passed: bool

    @property
    def worst(self) -> float:
        return max(self.lower, self.upper)

    def to_dict(self) -> dict:
        return asdict(self)


def barrier_check(field: ScalarField, t: float, R0: float, R_outer: float, H: float,
                  chart: EquidistantChart | None = None, tolerance: float | None = None
                  ) -> BarrierReport:
    """Check ``b - (b(R_outer) + t) <= u <= t`` at the nodes of ``field``.

    ``field.surface_radius`` gives node radii on the solution surface (E_H radii
    when ``chart`` is given, in which case ``b`` is the shifted barrier f_R0).  The
    lower barrier lives outside ``D_R0`` and is tested on nodes with ``r >= R0``.
    The default tolerance is ``5 h^2`` with ``h`` the largest radial spacing.
    """
    u = field.values
    r = field.surface_radius
    if tolerance is None:
        tolerance = 5.0 * field.mesh.h**2
    if chart is None:
        prof = RadialProfile(CmcParams(R0, INFINITE, H))

        def barrier(x):
            return prof.values(x)
    else:
        f = barrier_f_R(R0, H, chart)

        def barrier(x):
            return np.asarray(f(x))

    upper = float((u - t).max())
    mask = r >= R0
    if mask.any():
        b = barrier(r[mask])
        b_out = float(barrier(np.array([R_outer]))[0])
        lower = float(((b - (b_out + t)) - u[mask]).max())
        sharp = float(((b - b_out + t) - u[mask]).max())
    else:
        lower = sharp = -np.inf
    n = int(u.size)
    return BarrierReport(lower, upper, sharp, float(tolerance), n,
                         bool(lower <= tolerance and upper <= tolerance))
