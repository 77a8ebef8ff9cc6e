import numpy as np
import pytest

from fraclab.geometry import (
    curvature_divergence,
    default_eps_grad,
    geometry_of,
    vertical_excess,
)
from fraclab.grids import HalfSpaceGrid, ScalarField


def _grid2(nx=96, periodic=False):
    return HalfSpaceGrid(n=2, L=4.0, nx=nx, Y=4.0, ny=16, grading_gamma=1.0, periodic_x=periodic)


def test_plane_has_no_curvature_or_tangential_energy():
    grid = _grid2()
    U = ScalarField.from_function(grid, lambda x1, x2, y: x1 + 0 * y)
    geo = geometry_of(U)
    m = geo.interior_mask
    assert np.max(geo.curvature_sq_energy[m]) < 1e-20
    assert np.max(geo.tangential_sq[m]) < 1e-20
    assert np.max(geo.identity_residual[m]) < 1e-20


def test_radial_squared_matches_closed_form():
    grid = _grid2()
    U = ScalarField.from_function(grid, lambda x1, x2, y: x1**2 + x2**2 + 0 * y)
    geo = geometry_of(U, eps_grad=0.5)
    m = geo.interior_mask
    # K = 1/r on circles, |grad U| = 2r: curvature energy is exactly 4
    assert np.median(geo.curvature_sq_energy[m]) == pytest.approx(4.0, rel=0.03)
    assert np.max(geo.tangential_sq[m]) < 0.01
    Kd = curvature_divergence(U, eps_grad=0.5)
    r = np.sqrt(U.values)
    sample = m & (r > 1.0)
    assert np.allclose(Kd[sample] * r[sample], 1.0, atol=0.02)


def test_one_dimensional_field_is_flat():
    grid = _grid2()
    w = np.array([0.6, 0.8])
    U = ScalarField.from_function(
        grid, lambda x1, x2, y: np.tanh(w[0] * x1 + w[1] * x2) * np.exp(-y)
    )
    geo = geometry_of(U, eps_grad=1e-3)
    m = geo.interior_mask
    assert np.max(geo.curvature_sq_energy[m]) < 1e-4
    assert np.max(geo.tangential_sq[m]) < 1e-4


def test_identity_residual_decreases_under_refinement():
    rels = []
    for nx in (64, 128):
        grid = HalfSpaceGrid(n=2, L=4.0, nx=nx, Y=4.0, ny=16, grading_gamma=1.0, periodic_x=False)
        U = ScalarField.from_function(grid, lambda x1, x2, y: x1**2 + x2**2 + 0 * y)
        geo = geometry_of(U, eps_grad=0.5)
        m = geo.interior_mask
        denom = np.sum(geo.curvature_sq_energy[m] + geo.tangential_sq[m])
        rels.append(np.sum(geo.identity_residual[m]) / denom)
    assert rels[1] < 0.5 * rels[0]


def test_rotation_equivariance_quarter_turn():
    # rotating the trace pattern by 90 degrees permutes the axes; the
    # scalar outputs must rotate along
    grid = _grid2(nx=64, periodic=True)
    rng = np.random.default_rng(7)
    c = rng.standard_normal((3, 3))
    x1, x2 = grid.x_mesh()

    def pattern(a, b):
        vals = np.zeros(grid.shape)
        for i in range(3):
            for j in range(3):
                kk = np.hypot(i, j) * np.pi / grid.L
                vals += c[i, j] * (
                    np.cos(np.pi * (i * a + j * b) / grid.L)[..., None]
                    * np.exp(-kk * grid.y)
                )
        return vals

    U = ScalarField(grid, pattern(x1, x2))
    Urot = ScalarField(grid, pattern(-x2, x1))
    eps = default_eps_grad(U)
    geo = geometry_of(U, eps)
    georot = geometry_of(Urot, eps)
    # rotating (x1, x2) -> (-x2, x1) maps array indices (i, j) -> (j, nx - i)
    rot = lambda A: np.roll(np.flip(np.swapaxes(A, 0, 1), axis=0), 1, axis=0)
    m = geo.interior_mask & rot(georot.interior_mask)
    assert np.allclose(
        geo.curvature_sq_energy[m], rot(georot.curvature_sq_energy)[m], atol=1e-8
    )
    assert np.allclose(geo.tangential_sq[m], rot(georot.tangential_sq)[m], atol=1e-8)


def test_vertical_excess_zero_for_one_dimensional_fields():
    grid = _grid2()
    U = ScalarField.from_function(
        grid, lambda x1, x2, y: np.tanh(0.6 * x1 + 0.8 * x2) * np.exp(-y)
    )
    ve = vertical_excess(U, eps_grad=1e-3)
    assert np.max(np.abs(ve)) < 1e-10


def test_eps_grad_validation():
    grid = _grid2(nx=16)
    U = ScalarField.from_function(grid, lambda x1, x2, y: x1 + 0 * y)
    with pytest.raises(ValueError):
        geometry_of(U, eps_grad=0.0)


def test_divergence_curvature_needs_n2():
    grid = HalfSpaceGrid(n=1, L=2.0, nx=16, Y=1.0, ny=4)
    U = ScalarField(grid, np.zeros(grid.shape))
    with pytest.raises(ValueError):
        curvature_divergence(U)
