import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fraclab.grids import HalfSpaceGrid, TraceField
from fraclab.potentials import (
    BUILTINS,
    cubic_abs_well,
    eval_derivatives,
    make_potential,
    phase_separation,
    sign_condition,
)


def _traces(nx=16, n=1, seed=0):
    grid = HalfSpaceGrid(n=n, L=2.0, nx=nx, Y=1.0, ny=4)
    rng = np.random.default_rng(seed)
    u = TraceField(grid, rng.uniform(-2, 2, grid.x_shape))
    v = TraceField(grid, rng.uniform(-2, 2, grid.x_shape))
    return u, v


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_first_derivatives_match_finite_differences(name):
    F = make_potential(name) if name != "coupled_double_well" else make_potential(name, beta=0.5)
    u, v = _traces()
    d = eval_derivatives(F, u, v)
    h = 1e-6
    up = TraceField(u.grid, u.values + h)
    um = TraceField(u.grid, u.values - h)
    fd1 = (F.value(up.values, v.values) - F.value(um.values, v.values)) / (2 * h)
    assert np.allclose(d.f1.values, fd1, atol=1e-5)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_second_derivatives_match_finite_differences_on_D(name):
    F = make_potential(name) if name != "coupled_double_well" else make_potential(name, beta=0.5)
    u, v = _traces(seed=1)
    d = eval_derivatives(F, u, v)
    h = 1e-5
    keep = ~d.mask.values
    fd12 = (
        F.d1(u.values, v.values + h) - F.d1(u.values, v.values - h)
    ) / (2 * h)
    assert np.allclose(d.f12.values[keep], fd12[keep], atol=1e-4)


def test_mixed_partial_is_symmetric():
    # F_12 computed from F_1 and from F_2 agree (single declared d12)
    F = phase_separation()
    u, v = _traces(seed=2)
    h = 1e-5
    from_f1 = (F.d1(u.values, v.values + h) - F.d1(u.values, v.values - h)) / (2 * h)
    from_f2 = (F.d2(u.values + h, v.values) - F.d2(u.values - h, v.values)) / (2 * h)
    assert np.allclose(from_f1, from_f2, atol=1e-4)


def test_sign_condition_strict():
    u, v = _traces(seed=3)
    F = phase_separation()  # F_12 = -4 t s, mixed signs on random data
    d = eval_derivatives(F, u, v)
    ok_pos, n_pos = sign_condition(d.f12, d.mask, "nonneg")
    ok_neg, n_neg = sign_condition(d.f12, d.mask, "nonpos")
    assert not (ok_pos and ok_neg)
    assert n_pos + n_neg == d.f12.values.size
    with pytest.raises(ValueError):
        sign_condition(d.f12, d.mask, "positive")


def test_coupled_double_well_f12_constant():
    F = make_potential("coupled_double_well", beta=0.25)
    u, v = _traces(seed=4)
    d = eval_derivatives(F, u, v)
    assert np.all(d.f12.values == 0.25)
    ok, bad = sign_condition(d.f12, d.mask, "nonneg")
    assert ok and bad == 0


def test_cubic_abs_well_has_empty_mask():
    F = cubic_abs_well()
    u, v = _traces(seed=5)
    d = eval_derivatives(F, u, v)
    assert not np.any(d.mask.values)
    assert np.allclose(d.f11.values, np.abs(u.values))


def test_error_names_grid_point():
    F = make_potential("product")
    grid = HalfSpaceGrid(n=1, L=2.0, nx=8, Y=1.0, ny=4)
    u = TraceField(grid, np.full(grid.x_shape, 1e200))
    v = TraceField(grid, np.full(grid.x_shape, 1e200))
    bad = make_potential("double_well", scale=1e200)
    with np.errstate(over="ignore"), pytest.raises(ValueError, match="grid point"):
        eval_derivatives(bad, u, v)


def test_unknown_potential():
    with pytest.raises(ValueError, match="unknown potential"):
        make_potential("nope")


@given(beta=st.floats(-2, 2), t=st.floats(-3, 3), s=st.floats(-3, 3))
@settings(max_examples=50, deadline=None)
def test_double_well_gradient_consistency(beta, t, s):
    F = make_potential("coupled_double_well", beta=beta)
    h = 1e-6
    fd = (F.value(t + h, s) - F.value(t - h, s)) / (2 * h)
    assert F.d1(t, s) == pytest.approx(fd, abs=1e-4, rel=1e-4)
