"""Truncated half-space grids, scalar fields and weighted quadrature.

The computational domain is the box [-L, L]^n x [0, Y] approximating the
upper half-space R^n x (0, +inf).  The vertical axis carries a graded mesh
y_j = Y (j/ny)^gamma so that the degenerate weight y^alpha and the boundary
layer of the weighted normal derivative are resolved near y = 0.  All
quadrature against y^alpha uses exact per-cell integrals of the weight,
never point values at y = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class OutOfDomainError(ValueError):
    """A region or radius does not fit inside the truncated grid."""


@dataclass(frozen=True)
class FractionalOrder:
    """Order pair (s, alpha) of one equation, with alpha = 1 - 2s."""

    s: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")

    @property
    def alpha(self) -> float:
        return 1.0 - 2.0 * self.s

    @staticmethod
    def from_alpha(alpha: float) -> "FractionalOrder":
        if not -1.0 < alpha < 1.0:
            raise ValueError(f"alpha must lie in (-1, 1), got {alpha}")
        return FractionalOrder((1.0 - alpha) / 2.0)


def default_grading(alpha: float) -> float:
    """Default y-mesh grading exponent, stronger for more singular weights."""
    return max(1.0, 2.0 / (1.0 + alpha))


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Tensor grid on [-L, L]^n x [0, Y] with a graded vertical mesh.

    Tangential axes share the same extent and resolution.  With
    ``periodic_x`` the x-nodes are -L + i*dx, i = 0..nx-1 (right endpoint
    identified with the left); otherwise both endpoints are nodes.
    """

    n: int
    L: float
    nx: int
    Y: float
    ny: int
    grading_gamma: float = 1.0
    periodic_x: bool = True

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("tangential dimension must be 1 or 2")
        if self.L <= 0 or self.Y <= 0:
            raise ValueError("L and Y must be positive")
        if self.nx < 3 or self.ny < 3:
            raise ValueError("need at least 3 points per axis")
        if self.grading_gamma < 1.0:
            raise ValueError("grading exponent must be >= 1")

    # -- coordinates -------------------------------------------------------

    @cached_property
    def dx(self) -> float:
        if self.periodic_x:
            return 2.0 * self.L / self.nx
        return 2.0 * self.L / (self.nx - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        j = np.arange(self.ny + 1, dtype=float)
        return self.Y * (j / self.ny) ** self.grading_gamma

    @property
    def x_shape(self) -> tuple:
        return (self.nx,) * self.n

    @property
    def shape(self) -> tuple:
        return self.x_shape + (self.ny + 1,)

    def x_mesh(self) -> list:
        """Tangential coordinate arrays, one per axis, broadcast to x_shape."""
        if self.n == 1:
            return [self.x]
        xx, yy = np.meshgrid(self.x, self.x, indexing="ij")
        return [xx, yy]

    @cached_property
    def x_cell_bounds(self) -> tuple:
        """Per-node cell bounds (lo, hi) along one tangential axis."""
        lo = self.x - 0.5 * self.dx
        hi = self.x + 0.5 * self.dx
        if not self.periodic_x:
            lo = lo.copy()
            hi = hi.copy()
            lo[0] = -self.L
            hi[-1] = self.L
        return lo, hi

    @cached_property
    def x_cell_sizes(self) -> np.ndarray:
        lo, hi = self.x_cell_bounds
        return hi - lo

    # -- weight integrals --------------------------------------------------

    def y_cell_weight(self, alpha: float) -> np.ndarray:
        """Exact integrals of y^alpha over each vertical cell [y_j, y_{j+1}]."""
        y = self.y
        p = 1.0 + alpha
        return (y[1:] ** p - y[:-1] ** p) / p

    def y_cell_resistance(self, alpha: float) -> np.ndarray:
        """Exact integrals of y^(-alpha) over each vertical cell."""
        return self.y_cell_weight(-alpha)

    def y_dual_weight(self, alpha: float) -> np.ndarray:
        """Integrals of y^alpha over the dual cell around each y-level."""
        y = self.y
        mid = 0.5 * (y[:-1] + y[1:])
        lo = np.concatenate(([0.0], mid))
        hi = np.concatenate((mid, [y[-1]]))
        p = 1.0 + alpha
        return (hi**p - lo**p) / p

    # -- calculus ----------------------------------------------------------

    def diff_x(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Central x-derivative along a tangential axis (periodic wrap or
        one-sided second-order at the ends)."""
        dx = self.dx
        if self.periodic_x:
            return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * dx)
        out = np.empty_like(values)
        sl = [slice(None)] * values.ndim

        def at(i):
            s = sl.copy()
            s[axis] = i
            return tuple(s)

        out[at(slice(1, -1))] = (values[at(slice(2, None))] - values[at(slice(0, -2))]) / (2 * dx)
        out[at(0)] = (-3 * values[at(0)] + 4 * values[at(1)] - values[at(2)]) / (2 * dx)
        out[at(-1)] = (3 * values[at(-1)] - 4 * values[at(-2)] + values[at(-3)]) / (2 * dx)
        return out

    def diff_y(self, values: np.ndarray) -> np.ndarray:
        """Vertical derivative on the graded mesh (last axis).

        Nonuniform central differences in the interior, one-sided at
        y = 0 and y = Y (first order near the boundary layer).
        """
        y = self.y
        out = np.empty_like(values)
        hm = y[1:-1] - y[:-2]
        hp = y[2:] - y[1:-1]
        f0 = values[..., :-2]
        f1 = values[..., 1:-1]
        f2 = values[..., 2:]
        out[..., 1:-1] = (hm**2 * f2 - hp**2 * f0 + (hp**2 - hm**2) * f1) / (hm * hp * (hm + hp))
        out[..., 0] = (values[..., 1] - values[..., 0]) / (y[1] - y[0])
        out[..., -1] = (values[..., -1] - values[..., -2]) / (y[-1] - y[-2])
        return out


def _check_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class ScalarField:
    """Scalar field on a half-space grid, values indexed (x..., y-level)."""

    grid: HalfSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} != grid shape {self.grid.shape}")
        _check_finite(self.values, "ScalarField")

    def trace(self) -> "TraceField":
        return TraceField(self.grid, self.values[..., 0].copy())

    @staticmethod
    def from_function(grid: HalfSpaceGrid, f) -> "ScalarField":
        xs = grid.x_mesh()
        y = grid.y
        coords = [c[..., None] for c in xs]
        vals = np.asarray(f(*coords, y), dtype=float)
        vals = np.broadcast_to(vals, grid.shape).copy()
        return ScalarField(grid, vals)


@dataclass(frozen=True)
class TraceField:
    """Field on the boundary plane y = 0."""

    grid: HalfSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.x_shape:
            raise ValueError(f"trace shape {self.values.shape} != {self.grid.x_shape}")
        _check_finite(self.values, "TraceField")

    @staticmethod
    def from_function(grid: HalfSpaceGrid, f) -> "TraceField":
        xs = grid.x_mesh()
        vals = np.asarray(f(*xs), dtype=float)
        vals = np.broadcast_to(vals, grid.x_shape).copy()
        return TraceField(grid, vals)


class HalfBallRegion:
    """Half-ball B_R^+ centered at the origin, with fractional cell weights.

    Cells strictly inside the sphere get weight 1, strictly outside 0;
    cells cut by the sphere get the sampled 4^(n+1)-subgrid fraction.
    """

    def __init__(self, grid: HalfSpaceGrid, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        if radius > min(grid.L, grid.Y):
            raise OutOfDomainError(
                f"half-ball radius {radius} exceeds grid extent (L={grid.L}, Y={grid.Y})"
            )
        self.grid = grid
        self.radius = float(radius)
        self.weights = self._cell_weights()

    def _cell_weights(self) -> np.ndarray:
        g = self.grid
        R2 = self.radius**2
        xlo, xhi = g.x_cell_bounds
        ylo, yhi = g.y[:-1], g.y[1:]

        def axis_minmax(lo, hi):
            amin = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
            amax = np.maximum(np.abs(lo), np.abs(hi))
            return amin, amax

        xmin, xmax = axis_minmax(xlo, xhi)
        ymin, ymax = axis_minmax(ylo, yhi)

        if g.n == 1:
            mind2 = xmin[:, None] ** 2 + ymin[None, :] ** 2
            maxd2 = xmax[:, None] ** 2 + ymax[None, :] ** 2
        else:
            mind2 = xmin[:, None, None] ** 2 + xmin[None, :, None] ** 2 + ymin[None, None, :] ** 2
            maxd2 = xmax[:, None, None] ** 2 + xmax[None, :, None] ** 2 + ymax[None, None, :] ** 2

        w = np.zeros(mind2.shape)
        w[maxd2 <= R2] = 1.0
        cut = (mind2 < R2) & (maxd2 > R2)
        if np.any(cut):
            idx = np.argwhere(cut)
            frac = np.linspace(1.0 / 8.0, 7.0 / 8.0, 4)  # subcell centers
            if g.n == 1:
                i, j = idx[:, 0], idx[:, 1]
                xs = xlo[i][:, None] + (xhi - xlo)[i][:, None] * frac[None, :]
                ys = ylo[j][:, None] + (yhi - ylo)[j][:, None] * frac[None, :]
                d2 = xs[:, :, None] ** 2 + ys[:, None, :] ** 2
                w[cut] = np.mean(d2 <= R2, axis=(1, 2))
            else:
                i1, i2, j = idx[:, 0], idx[:, 1], idx[:, 2]
                xs1 = xlo[i1][:, None] + (xhi - xlo)[i1][:, None] * frac[None, :]
                xs2 = xlo[i2][:, None] + (xhi - xlo)[i2][:, None] * frac[None, :]
                ys = ylo[j][:, None] + (yhi - ylo)[j][:, None] * frac[None, :]
                d2 = (
                    xs1[:, :, None, None] ** 2
                    + xs2[:, None, :, None] ** 2
                    + ys[:, None, None, :] ** 2
                )
                w[cut] = np.mean(d2 <= R2, axis=(1, 2, 3))
        return w


def weighted_volume_integral(f: ScalarField, alpha: float, region: HalfBallRegion) -> float:
    """Integral of y^alpha * f over the half-ball, exact cell weights in y."""
    if not -1.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (-1, 1), got {alpha}")
    g = f.grid
    if region.grid is not g and region.grid != g:
        raise ValueError("region grid differs from field grid")
    wy = g.y_cell_weight(alpha)
    # cell value: average of the two bounding y-levels at each x-node
    fc = 0.5 * (f.values[..., :-1] + f.values[..., 1:])
    sizes = g.x_cell_sizes
    if g.n == 1:
        cellvol = sizes[:, None] * wy[None, :]
    else:
        cellvol = sizes[:, None, None] * sizes[None, :, None] * wy[None, None, :]
    return float(np.sum(region.weights * cellvol * fc))


def weighted_volume_integral_values(
    grid: HalfSpaceGrid, values: np.ndarray, alpha: float, region: HalfBallRegion
) -> float:
    """Same as weighted_volume_integral but on a raw array."""
    return weighted_volume_integral(ScalarField(grid, values), alpha, region)


def boundary_integral(g: TraceField, region: HalfBallRegion) -> float:
    """Integral of the trace over the boundary disc {|x| <= R, y = 0}."""
    grid = g.grid
    R = region.radius
    lo, hi = grid.x_cell_bounds
    if grid.n == 1:
        cov = np.clip(np.minimum(hi, R) - np.maximum(lo, -R), 0.0, None)
        return float(np.sum(cov * g.values))
    # fractional coverage of the disc per 2D cell, subsampled on cut cells
    R2 = R**2
    amin = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    amax = np.maximum(np.abs(lo), np.abs(hi))
    mind2 = amin[:, None] ** 2 + amin[None, :] ** 2
    maxd2 = amax[:, None] ** 2 + amax[None, :] ** 2
    w = np.zeros(mind2.shape)
    w[maxd2 <= R2] = 1.0
    cut = (mind2 < R2) & (maxd2 > R2)
    if np.any(cut):
        idx = np.argwhere(cut)
        frac = np.linspace(1.0 / 16.0, 15.0 / 16.0, 8)
        i1, i2 = idx[:, 0], idx[:, 1]
        xs1 = lo[i1][:, None] + (hi - lo)[i1][:, None] * frac[None, :]
        xs2 = lo[i2][:, None] + (hi - lo)[i2][:, None] * frac[None, :]
        d2 = xs1[:, :, None] ** 2 + xs2[:, None, :] ** 2
        w[cut] = np.mean(d2 <= R2, axis=(1, 2))
    sizes = grid.x_cell_sizes
    area = sizes[:, None] * sizes[None, :]
    return float(np.sum(w * area * g.values))


def gradient(f: ScalarField) -> np.ndarray:
    """Full gradient (x-components then y), stacked along the first axis."""
    g = f.grid
    comps = [g.diff_x(f.values, axis) for axis in range(g.n)]
    comps.append(g.diff_y(f.values))
    return np.stack(comps)


def gradient_x(f: ScalarField) -> np.ndarray:
    """Tangential gradient components only."""
    g = f.grid
    return np.stack([g.diff_x(f.values, axis) for axis in range(g.n)])
