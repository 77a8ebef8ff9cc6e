"""Level-set geometry of half-space fields from gradients alone.

For each fixed height y the level sets of x -> U(x, y) carry a unit normal
nu = grad_x U / |grad_x U|, a tangential gradient (projection orthogonal to
nu), and a total curvature K.  Everything here is computed from finite
differences of U - no contour is ever traced - using the identity

    K^2 |grad_x U|^2 + |grad_L |grad_x U||^2
        = sum_j |grad_x U_{x_j}|^2 - |grad_x |grad_x U||^2,

restricted to the discrete nondegenerate set {|grad_x U| > eps}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import HalfSpaceGrid, ScalarField


def default_eps_grad(U: ScalarField) -> float:
    """Relative gradient threshold defining the discrete nondegenerate set."""
    osc = float(np.max(U.values) - np.min(U.values))
    return 1e-6 * max(osc, 1e-30)


@dataclass(frozen=True)
class GeometryFields:
    """Per-point level-set quantities of one field (x-derivatives only)."""

    grid: HalfSpaceGrid
    grad_x_norm: np.ndarray
    nondegenerate_mask: np.ndarray  # boolean, |grad_x U| > eps_grad
    curvature_sq_energy: np.ndarray  # K^2 |grad_x U|^2 on the mask, 0 off it
    tangential_sq: np.ndarray  # |grad_L |grad_x U||^2 likewise
    identity_residual: np.ndarray  # |identity LHS - RHS| per point
    eps_grad: float

    @property
    def interior_mask(self) -> np.ndarray:
        """Mask eroded by one cell in every direction: points whose whole
        difference stencil lies in the nondegenerate set."""
        m = self.nondegenerate_mask
        out = m.copy()
        for axis in range(m.ndim):
            out &= np.roll(m, 1, axis=axis) & np.roll(m, -1, axis=axis)
            if axis == m.ndim - 1 or not self.grid.periodic_x:
                sl = [slice(None)] * m.ndim
                sl[axis] = 0
                out[tuple(sl)] = False
                sl[axis] = -1
                out[tuple(sl)] = False
        return out


def _hessian_x(U: ScalarField) -> list:
    g = U.grid
    rows = []
    for i in range(g.n):
        di = g.diff_x(U.values, i)
        rows.append([g.diff_x(di, j) for j in range(g.n)])
    return rows


def geometry_of(U: ScalarField, eps_grad: float | None = None) -> GeometryFields:
    """Level-set geometry of U from x-differences, masked where the
    tangential gradient degenerates.

    The curvature energy comes from the squared-Hessian-row identity
    (clipped at 0 against rounding); for n = 2 the independent divergence
    form of the curvature feeds the identity residual.
    """
    grid = U.grid
    if eps_grad is None:
        eps_grad = default_eps_grad(U)
    if eps_grad <= 0:
        raise ValueError("eps_grad must be positive")
    n = grid.n
    gx = np.stack([grid.diff_x(U.values, i) for i in range(n)])
    gnorm = np.sqrt(np.sum(gx**2, axis=0))
    mask = gnorm > eps_grad
    safe = np.where(mask, gnorm, 1.0)
    nu = gx / safe

    H = _hessian_x(U)
    S1 = np.zeros(grid.shape)
    for i in range(n):
        for j in range(n):
            S1 += H[i][j] ** 2
    g_of_norm = np.stack([grid.diff_x(gnorm, j) for j in range(n)])
    S2 = np.sum(g_of_norm**2, axis=0)
    normal_part = np.sum(g_of_norm * nu, axis=0) ** 2
    tangential = np.where(mask, np.clip(S2 - normal_part, 0.0, None), 0.0)
    curvature = np.where(mask, np.clip(S1 - S2 - tangential, 0.0, None), 0.0)

    if n == 2:
        div_nu = grid.diff_x(np.where(mask, nu[0], 0.0), 0) + grid.diff_x(
            np.where(mask, nu[1], 0.0), 1
        )
        curvature_div = div_nu**2 * gnorm**2
        residual = np.where(mask, np.abs(curvature_div + tangential - (S1 - S2)), 0.0)
    else:
        # n = 1: no principal curvatures; the identity reduces to S1 = S2
        residual = np.where(mask, np.abs(S1 - S2), 0.0)

    return GeometryFields(
        grid=grid,
        grad_x_norm=gnorm,
        nondegenerate_mask=mask,
        curvature_sq_energy=curvature,
        tangential_sq=tangential,
        identity_residual=residual,
        eps_grad=float(eps_grad),
    )


def curvature_divergence(U: ScalarField, eps_grad: float | None = None) -> np.ndarray:
    """Direct curvature K = div(nu) for n = 2 (cross-check route)."""
    grid = U.grid
    if grid.n != 2:
        raise ValueError("divergence-form curvature is defined for n = 2")
    if eps_grad is None:
        eps_grad = default_eps_grad(U)
    gx = np.stack([grid.diff_x(U.values, i) for i in range(2)])
    gnorm = np.sqrt(np.sum(gx**2, axis=0))
    mask = gnorm > eps_grad
    nu = gx / np.where(mask, gnorm, 1.0)
    div_nu = grid.diff_x(np.where(mask, nu[0], 0.0), 0) + grid.diff_x(
        np.where(mask, nu[1], 0.0), 1
    )
    return np.where(mask, div_nu, 0.0)


def vertical_excess(U: ScalarField, eps_grad: float | None = None) -> np.ndarray:
    """Pointwise excess  sum_j (d_y U_{x_j})^2 - (d_y |grad_x U|)^2  on the
    nondegenerate set (a Cauchy-Schwarz gap, nonnegative in the continuum),
    0 off it."""
    grid = U.grid
    if eps_grad is None:
        eps_grad = default_eps_grad(U)
    n = grid.n
    gx = np.stack([grid.diff_x(U.values, i) for i in range(n)])
    gnorm = np.sqrt(np.sum(gx**2, axis=0))
    mask = gnorm > eps_grad
    dy_parts = np.sum(np.stack([grid.diff_y(gx[i]) ** 2 for i in range(n)]), axis=0)
    dy_norm = grid.diff_y(gnorm) ** 2
    return np.where(mask, dy_parts - dy_norm, 0.0)
