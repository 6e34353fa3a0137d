"""Damped Newton iteration for the discrete Dirichlet problem."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .operator import CmcOperator

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MIN_STEP = 2.0**-30


class NewtonError(RuntimeError):
    """The Newton iteration stalled or hit its iteration cap."""

    def __init__(self, message, iterations, residual_norm):
        super().__init__(message)
        self.iterations = iterations
        self.residual_norm = residual_norm


@dataclass
class NewtonStats:
    iterations: int
    residual_norm: float
    picard_steps: int


def _solve_linear(J, rhs):
    with warnings.catch_warnings():
        warnings.simplefilter("error", spla.MatrixRankWarning)
        try:
            x = spla.spsolve(J.tocsc(), rhs)
        except (spla.MatrixRankWarning, RuntimeError):
            return None
    return x if np.all(np.isfinite(x)) else None


def newton_solve(op: CmcOperator, U0, inner, outer, tol: float = 1e-9,
                 max_iter: int = 50) -> tuple[np.ndarray, NewtonStats]:
    """Solve ``M_H(U) = 0`` with ``U = inner`` on the first row and ``outer`` on the last.

    Each step solves with the exact Jacobian and backtracks until the residual's
    Euclidean norm drops by the Armijo factor.  A singular Jacobian or a failed
    line search falls back to one damped Picard step (Jacobian with frozen ``W``).
    Convergence is judged on the max-norm of ``M_H`` at interior nodes; a norm
    within a factor 10 of ``tol`` is also accepted once it sits below the rounding
    floor of the discrete divergence.
    """
    shape = op.mesh.shape
    U = np.array(U0, dtype=float, copy=True)
    U[0] = inner
    U[-1] = outer
    F = op.residual(U, inner, outer)
    picard = 0
    for it in range(max_iter + 1):
        norm = float(np.abs(F).max())
        if not np.isfinite(norm):
            raise NewtonError("residual is not finite", it, norm)
        if norm <= tol:
            return U, NewtonStats(it, norm, picard)
        if norm <= 10 * tol and norm <= op.roundoff_floor(U):
            log.debug("newton stopped at the rounding floor, |F|=%.3e", norm)
            return U, NewtonStats(it, norm, picard)
        if it == max_iter:
            break
        accepted = False
        for frozen in (False, True):
            delta = _solve_linear(op.jacobian(U, frozen=frozen), -F)
            if delta is None:
                continue
            delta = delta.reshape(shape)
            f0 = float(F @ F)
            step = 1.0
            while step >= MIN_STEP:
                U_try = U + step * delta
                U_try[0] = inner
                U_try[-1] = outer
                F_try = op.residual(U_try, inner, outer)
                f1 = float(F_try @ F_try)
                if np.isfinite(f1) and f1 <= (1.0 - 2 * ARMIJO_C * step) * f0:
                    accepted = True
                    break
                step *= 0.5
            if accepted:
                picard += frozen
                U, F = U_try, F_try
                break
        if not accepted:
            raise NewtonError(f"line search failed at iteration {it}, |M_H| = {norm:.3e}", it, norm)
        log.debug("newton it=%d |F|=%.3e step=%.3g", it, norm, step)
    raise NewtonError(f"no convergence in {max_iter} iterations, |M_H| = {norm:.3e}", max_iter, norm)


def solution_tangent(op: CmcOperator, U) -> np.ndarray:
    """``dU/dt`` along the family with outer data raised by ``t`` (inner data fixed)."""
    rhs = np.zeros(op.mesh.shape)
    rhs[-1] = 1.0
    z = _solve_linear(op.jacobian(U), rhs.ravel())
    if z is None:
        raise NewtonError("singular Jacobian while computing the continuation tangent", 0, np.nan)
    return z.reshape(op.mesh.shape)


class DirichletFamily:
    """Discrete solutions ``U_t`` with fixed inner data and outer data ``outer0 + t``.

    Solved states are kept; a new ``t`` starts from the nearest one advanced by the
    tangent ``dU/dt`` (Euler predictor), and the interval is halved when Newton
    fails from the prediction.
    """

    def __init__(self, op: CmcOperator, inner, outer0: float, start=None, tol: float = 1e-9,
                 max_iter: int = 50, max_halvings: int = 8):
        self.op = op
        self.inner = inner
        self.outer0 = float(outer0)
        self.tol = tol
        self.max_iter = max_iter
        self.max_halvings = max_halvings
        self.states: dict[float, tuple[np.ndarray, NewtonStats]] = {}
        self._tangents: dict[float, np.ndarray] = {}
        if start is None:
            mesh = op.mesh
            start = np.outer(1.0 - mesh.phi, np.broadcast_to(inner, (mesh.n_theta,))) \
                + np.outer(mesh.phi, np.full(mesh.n_theta, self.outer0))
        self._start = np.array(start, dtype=float)
        self.newton_iterations = 0

    def _newton(self, t, guess):
        U, stats = newton_solve(self.op, guess, self.inner, self.outer0 + t, self.tol, self.max_iter)
        self.newton_iterations += stats.iterations
        self.states[t] = (U, stats)
        return U, stats

    def _tangent(self, t):
        if t not in self._tangents:
            self._tangents[t] = solution_tangent(self.op, self.states[t][0])
        return self._tangents[t]

    def solve(self, t: float) -> tuple[np.ndarray, NewtonStats]:
        t = float(t)
        if t in self.states:
            return self.states[t]
        if not self.states:
            self._newton(0.0, self._start)
            if t == 0.0:
                return self.states[0.0]
        t0 = min(self.states, key=lambda s: abs(s - t))
        return self._advance(t0, t, self.max_halvings)

    def _advance(self, t0, t1, halvings):
        U0 = self.states[t0][0]
        try:
            return self._newton(t1, U0 + (t1 - t0) * self._tangent(t0))
        except NewtonError:
            if halvings == 0:
                raise
        mid = 0.5 * (t0 + t1)
        self._advance(t0, mid, halvings - 1)
        return self._advance(mid, t1, halvings - 1)
