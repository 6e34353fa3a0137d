"""Finite-volume discretization of the CMC Killing-graph operator on a polar mesh.

With ``W = sqrt(1 + cosh(r)^2 |grad u|^2)`` the operator

    M_H(u) = div(cosh(r) grad u / W) + <grad u, sinh(r) grad r> / W - 2H

equals ``div(cosh(r)^2 grad u / W) / cosh(r) - 2H`` because
``grad cosh r = sinh r grad r``.  The discrete form integrates the divergence
over dual cells of the computational (xi, theta) grid: fluxes live on half
nodes, tangential derivatives there are four-point averages, and the metric of
``r = rho(theta) + phi(xi) L(theta)`` is evaluated exactly at each face.

In (xi, theta) coordinates the base metric is

    g = [[A^2, A b], [A b, b^2 + sinh(r)^2]],   A = L phi'(xi),  b = rho'(theta) (1 - phi(xi)),

with ``sqrt(det g) = A sinh r``.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mesh import PolarMesh


def _inverse_metric(A, b, S):
    g_xx = (b * b + S * S) / (A * A * S * S)
    g_xt = -b / (A * S * S)
    g_tt = 1.0 / (S * S)
    return g_xx, g_xt, g_tt


class _Faces:
    """Geometric coefficients on one family of faces."""

    def __init__(self, A, b, r):
        S = np.sinh(r)
        self.c2 = np.cosh(r) ** 2
        self.g_xx, self.g_xt, self.g_tt = _inverse_metric(A, b, S)
        self.kappa = A * S * self.c2

    def flux(self, p, m, component, with_derivative=False, frozen=False):
        """Flux ``kappa (G q)^k / W`` for ``k`` in {'xi', 'theta'} and its partials in ``p, m``."""
        P_x = self.g_xx * p + self.g_xt * m
        P_t = self.g_xt * p + self.g_tt * m
        W = np.sqrt(1.0 + self.c2 * (p * P_x + m * P_t))
        if component == "xi":
            P_k, G_kx, G_kt = P_x, self.g_xx, self.g_xt
        else:
            P_k, G_kx, G_kt = P_t, self.g_xt, self.g_tt
        F = self.kappa * P_k / W
        if not with_derivative:
            return F
        if frozen:
            return F, self.kappa * G_kx / W, self.kappa * G_kt / W
        W3 = W**3
        dp = self.kappa * (G_kx / W - self.c2 * P_k * P_x / W3)
        dm = self.kappa * (G_kt / W - self.c2 * P_k * P_t / W3)
        return F, dp, dm


class CmcOperator:
    """Discrete ``M_H`` on ``mesh`` with Dirichlet rows at the first and last radial index."""

    def __init__(self, mesh: PolarMesh, H: float):
        self.mesh = mesh
        self.H = float(H)
        n_r, n_t = mesh.shape
        hx, ht = mesh.h_xi, mesh.h_theta
        dom = mesh.domain
        xi = mesh.xi
        # xi-faces (i + 1/2, j), i = 0 .. n_r - 2
        phi_f, dphi_f = mesh.map(0.5 * (xi[:-1] + xi[1:]))
        L = mesh.length[None, :]
        b = dom.drho(mesh.theta)[None, :] * (1.0 - phi_f[:, None])
        self.xi_faces = _Faces(L * dphi_f[:, None], b, mesh.rho[None, :] + phi_f[:, None] * L)
        # theta-faces (i, j + 1/2), interior i = 1 .. n_r - 2
        th = mesh.theta + 0.5 * ht
        rho_h = dom.rho(th)
        L_h = (mesh.R_outer - rho_h)[None, :]
        phi_i = mesh.phi[1:-1, None]
        b_h = dom.drho(th)[None, :] * (1.0 - phi_i)
        self.theta_faces = _Faces(L_h * mesh.dphi[1:-1, None], b_h, rho_h[None, :] + phi_i * L_h)
        # node scaling: sqrt(det g) cosh r
        r = mesh.r
        self.volume = mesh.length[None, :] * mesh.dphi[:, None] * np.sinh(r) * np.cosh(r)
        self.hx, self.ht = hx, ht
        self.n_r, self.n_t = n_r, n_t

    # -- face derivatives --------------------------------------------------------------
    def _face_derivatives(self, U):
        hx, ht = self.hx, self.ht
        Up = np.roll(U, -1, axis=1)
        Um = np.roll(U, 1, axis=1)
        px = (U[1:] - U[:-1]) / hx
        mx = (Up[:-1] - Um[:-1] + Up[1:] - Um[1:]) / (4.0 * ht)
        pt = (U[2:] - U[:-2] + Up[2:] - Up[:-2]) / (4.0 * hx)
        mt = (Up[1:-1] - U[1:-1]) / ht
        return px, mx, pt, mt

    def interior_residual(self, U) -> np.ndarray:
        """``M_H`` at interior nodes, shape ``(n_r - 2, n_theta)``."""
        px, mx, pt, mt = self._face_derivatives(U)
        Fx = self.xi_faces.flux(px, mx, "xi")
        Ft = self.theta_faces.flux(pt, mt, "theta")
        div = (Fx[1:] - Fx[:-1]) / self.hx + (Ft - np.roll(Ft, 1, axis=1)) / self.ht
        return div / self.volume[1:-1] - 2.0 * self.H

    def roundoff_floor(self, U, J=None) -> float:
        """Max-norm level of ``M_H`` explained by rounding ``U`` to working precision.

        Bounded by ``eps * (|J| |U|)`` row by row, which captures the amplification
        of rounding errors by the second differences on fine radial spacing.
        """
        J = self.jacobian(U) if J is None else J
        amp = abs(J) @ np.abs(np.asarray(U, dtype=float)).ravel()
        amp = amp.reshape(self.mesh.shape)[1:-1]
        return float(8 * np.finfo(float).eps * (amp + 2.0 * abs(self.H)).max())

    def residual(self, U, inner, outer) -> np.ndarray:
        """Full residual vector: Dirichlet mismatch on boundary rows, ``M_H`` inside."""
        R = np.empty_like(U)
        R[0] = U[0] - inner
        R[-1] = U[-1] - outer
        R[1:-1] = self.interior_residual(U)
        return R.ravel()

    def jacobian(self, U, frozen: bool = False) -> sp.csr_matrix:
        """Exact Jacobian of :meth:`residual` (``frozen`` keeps ``W`` fixed: the Picard matrix)."""
        n_r, n_t = self.n_r, self.n_t
        hx, ht = self.hx, self.ht
        px, mx, pt, mt = self._face_derivatives(U)
        _, dFx_p, dFx_m = self.xi_faces.flux(px, mx, "xi", True, frozen)
        _, dFt_p, dFt_m = self.theta_faces.flux(pt, mt, "theta", True, frozen)

        idx = np.arange(n_r * n_t).reshape(n_r, n_t)
        jp = np.roll(np.arange(n_t), -1)
        jm = np.roll(np.arange(n_t), 1)
        rows, cols, vals = [], [], []

        def add(row_nodes, scale, col_nodes, coef):
            rows.append(row_nodes.ravel())
            cols.append(col_nodes.ravel())
            vals.append((scale * coef).ravel())

        # xi-face between rows i and i+1 contributes +F/hx to row i and -F/hx to row i+1
        i_lo = np.arange(n_r - 1)[:, None]
        j = np.arange(n_t)[None, :]
        face_cols = [
            (idx[i_lo + 1, j], dFx_p / hx),
            (idx[i_lo, j], -dFx_p / hx),
            (idx[i_lo, jp[j]], dFx_m / (4 * ht)),
            (idx[i_lo + 1, jp[j]], dFx_m / (4 * ht)),
            (idx[i_lo, jm[j]], -dFx_m / (4 * ht)),
            (idx[i_lo + 1, jm[j]], -dFx_m / (4 * ht)),
        ]
        vol = self.volume
        lower_rows = slice(1, None)     # faces whose lower node i is interior
        upper_rows = slice(0, n_r - 2)  # faces whose upper node i+1 is interior
        for col, coef in face_cols:
            add(idx[1:n_r - 1], 1.0 / (hx * vol[1:-1]), col[lower_rows], coef[lower_rows])
            add(idx[1:n_r - 1], -1.0 / (hx * vol[1:-1]), col[upper_rows], coef[upper_rows])

        # theta-face between j and j+1 at interior row i
        ii = np.arange(1, n_r - 1)[:, None]
        face_cols = [
            (idx[ii, jp[j]], dFt_m / ht),
            (idx[ii, j], -dFt_m / ht),
            (idx[ii + 1, j], dFt_p / (4 * hx)),
            (idx[ii + 1, jp[j]], dFt_p / (4 * hx)),
            (idx[ii - 1, j], -dFt_p / (4 * hx)),
            (idx[ii - 1, jp[j]], -dFt_p / (4 * hx)),
        ]
        row_here = idx[ii, j]
        row_next = idx[ii, jp[j]]
        vol_in = vol[1:-1]
        for col, coef in face_cols:
            add(row_here, 1.0 / (ht * vol_in), col, coef)
            add(row_next, -1.0 / (ht * vol_in[:, jp]), col, coef)

        boundary = np.concatenate([idx[0], idx[-1]])
        rows.append(boundary)
        cols.append(boundary)
        vals.append(np.ones(boundary.size))
        n = n_r * n_t
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, n))


def nodal_gradient(mesh: PolarMesh, U) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal polar components ``(u_r, u_theta / sinh r)`` at every node.

    Radial derivatives are centered inside and second-order one-sided on the two
    boundary rows; angular derivatives are centered (periodic).
    """
    U = np.asarray(U, dtype=float)
    hx, ht = mesh.h_xi, mesh.h_theta
    p = np.empty_like(U)
    p[1:-1] = (U[2:] - U[:-2]) / (2 * hx)
    p[0] = (-3 * U[0] + 4 * U[1] - U[2]) / (2 * hx)
    p[-1] = (3 * U[-1] - 4 * U[-2] + U[-3]) / (2 * hx)
    m = (np.roll(U, -1, axis=1) - np.roll(U, 1, axis=1)) / (2 * ht)
    A = mesh.length[None, :] * mesh.dphi[:, None]
    b = mesh.domain.drho(mesh.theta)[None, :] * (1.0 - mesh.phi[:, None])
    u_r = p / A
    u_t = (m - b * u_r) / np.sinh(mesh.r)
    return u_r, u_t


def gradient_norm(mesh: PolarMesh, U) -> np.ndarray:
    u_r, u_t = nodal_gradient(mesh, U)
    return np.hypot(u_r, u_t)
