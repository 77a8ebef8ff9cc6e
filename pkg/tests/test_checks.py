import numpy as np
import pytest

from fraclab.checks import (
    DEFAULT_TOL_COEFF,
    HypothesisError,
    TestFunctionPair,
    alignment_check,
    annulus_lemma_check,
    ball_cutoff,
    ball_energy,
    canonical_test_basis,
    energy_growth_sweep,
    extract_direction,
    linearized_rayleigh,
    log_cutoff,
    monotonicity_check,
    poincare_monotone,
    poincare_stable,
    radial_bump,
    stability_form,
    stability_min,
    symmetry_decay_experiment,
)
from fraclab.grids import (
    FractionalOrder,
    HalfSpaceGrid,
    OutOfDomainError,
    ScalarField,
    TraceField,
)
from fraclab.potentials import double_well
from fraclab.solver import SolutionPair


def _synthetic_pair(grid, angle_deg=0.0):
    om = np.array([np.sin(np.radians(angle_deg)), np.cos(np.radians(angle_deg))])
    xs = grid.x_mesh()
    t = sum(om[i] * xs[i] for i in range(grid.n))[..., None]
    decay = np.exp(-grid.y / (1.0 + grid.y))
    U = ScalarField(grid, np.tanh(t) * decay)
    V = ScalarField(grid, -np.tanh(t) * decay)
    o = FractionalOrder(0.5)
    return SolutionPair(U=U, V=V, order1=o, order2=o, potential=double_well())


def test_test_pair_support_enforced():
    grid = HalfSpaceGrid(n=1, L=4.0, nx=64, Y=4.0, ny=32, periodic_x=False)
    ones = ScalarField(grid, np.ones(grid.shape))
    with pytest.raises(ValueError, match="vanish"):
        TestFunctionPair(ones, ones, 2.0)
    with pytest.raises(OutOfDomainError):
        TestFunctionPair(ones, ones, 10.0)
    b = radial_bump(grid, 1.0, 0.5)
    TestFunctionPair(b, b, 2.0)  # fits


def test_log_cutoff_shape_and_domain():
    grid = HalfSpaceGrid(n=1, L=8.0, nx=64, Y=8.0, ny=32, periodic_x=False)
    phi = log_cutoff(4.0, grid)
    assert phi.values.min() == 0.0 and phi.values.max() == 1.0
    # equal to 1 inside B_sqrt(R)
    assert phi.values[np.argmin(np.abs(grid.x)), 0] == 1.0
    with pytest.raises(ValueError):
        log_cutoff(1.0, grid)
    with pytest.raises(OutOfDomainError):
        log_cutoff(100.0, grid)


def test_monotonicity_check_margins(monotone_pair_small):
    mono = monotonicity_check(monotone_pair_small)
    assert mono.monotone and mono.margin > 0
    flipped = SolutionPair(
        U=monotone_pair_small.V,
        V=monotone_pair_small.U,
        order1=monotone_pair_small.order1,
        order2=monotone_pair_small.order2,
        potential=monotone_pair_small.potential,
    )
    assert not monotonicity_check(flipped).monotone


def test_canonical_basis_is_independent(monotone_pair_small):
    basis = canonical_test_basis(monotone_pair_small, 4.0, size=20)
    assert len(basis) == 20
    lam, coef = stability_min(monotone_pair_small, basis)
    assert np.isfinite(lam)
    assert len(coef) == 20


def test_stability_positive_for_monotone_double_well(monotone_pair_small):
    basis = canonical_test_basis(monotone_pair_small, 4.0, size=20)
    forms = [stability_form(monotone_pair_small, t) for t in basis]
    assert min(forms) > -1e-10
    lam, _ = stability_min(monotone_pair_small, basis)
    assert lam > -1e-10


def test_stability_min_rejects_duplicate_basis(monotone_pair_small):
    basis = canonical_test_basis(monotone_pair_small, 4.0, size=5)
    with pytest.raises(ValueError, match="dependent"):
        stability_min(monotone_pair_small, basis + [basis[0]])


def test_linearized_rayleigh_nonnegative_on_derivative(monotone_pair_small):
    pair = monotone_pair_small
    grid = pair.grid
    phi = ball_cutoff(grid, 4.0)
    xi = ScalarField(grid, grid.diff_x(pair.U.values, 1) * phi.values)
    assert linearized_rayleigh(pair, xi, "U") > -1e-10
    with pytest.raises(ValueError):
        linearized_rayleigh(pair, xi, "W")


def test_poincare_monotone_requires_monotone_pair():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=32, Y=8.0, ny=16, periodic_x=False)
    pair = _synthetic_pair(grid)
    flipped = SolutionPair(
        U=pair.V, V=pair.U, order1=pair.order1, order2=pair.order2, potential=pair.potential
    )
    with pytest.raises(HypothesisError):
        poincare_monotone(flipped, log_cutoff(4.0, grid))


def test_poincare_lhs_vanishes_for_exact_1d_pair():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=64, Y=8.0, ny=32, grading_gamma=2.0, periodic_x=False)
    pair = _synthetic_pair(grid)
    for R in (2.0, 4.0, 8.0):
        rep = poincare_monotone(pair, log_cutoff(R, grid))
        assert rep.lhs_total <= rep.tol
        assert rep.satisfied


def test_poincare_stable_coupling_sign(monotone_pair_small):
    rep = poincare_stable(monotone_pair_small, log_cutoff(4.0, monotone_pair_small.grid))
    # F_12 = 0: no coupling contribution
    assert rep.coupling_term == 0.0
    assert rep.satisfied


def test_energy_growth_errors():
    grid = HalfSpaceGrid(n=1, L=8.0, nx=64, Y=8.0, ny=32, periodic_x=False)
    pair = _synthetic_pair(grid)
    with pytest.raises(ValueError):
        energy_growth_sweep(pair, [2.0])


def test_ball_energy_matches_direct_quadrature():
    grid = HalfSpaceGrid(n=1, L=4.0, nx=128, Y=4.0, ny=96, grading_gamma=1.0, periodic_x=False)
    f = ScalarField.from_function(grid, lambda x, y: x + y)
    # |grad f|^2 = 2 over B_R^+: energy = 2 * area = pi R^2
    assert ball_energy(f, 0.0, 2.0) == pytest.approx(np.pi * 4.0, rel=5e-3)


def test_annulus_rejects_negative_density():
    grid = HalfSpaceGrid(n=1, L=8.0, nx=64, Y=8.0, ny=32, periodic_x=False)
    h = ScalarField(grid, -np.ones(grid.shape))
    with pytest.raises(ValueError, match="nonnegative"):
        annulus_lemma_check(h, 4.0)
    with pytest.raises(ValueError):
        annulus_lemma_check(ScalarField(grid, np.ones(grid.shape)), 0.5)


def test_decay_experiment_refuses_without_hypotheses():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=32, Y=8.0, ny=16, periodic_x=False)
    pair = _synthetic_pair(grid)
    flipped = SolutionPair(
        U=pair.V, V=pair.U, order1=pair.order1, order2=pair.order2, potential=pair.potential
    )
    with pytest.raises(HypothesisError, match="monotone"):
        symmetry_decay_experiment(flipped, [2.0, 4.0])


def test_decay_experiment_monotone_regime():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=48, Y=8.0, ny=24, grading_gamma=2.0, periodic_x=False)
    pair = _synthetic_pair(grid)
    table = symmetry_decay_experiment(pair, [2.0, 4.0, 8.0])
    assert len(table.rows) == 3
    # exactly 1D: inner level-set energies vanish
    assert all(r.lhs_inner < 1e-8 for r in table.rows)
    assert table.hypotheses["monotone"]


def test_extract_direction_recovers_angle():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=96, Y=1.0, ny=4, periodic_x=False)
    for angle in (0.0, 20.0, -35.0):
        om = np.array([np.sin(np.radians(angle)), np.cos(np.radians(angle))])
        tr = TraceField.from_function(grid, lambda x1, x2: np.tanh(om[0] * x1 + om[1] * x2))
        res = extract_direction(tr)
        err = np.degrees(np.arccos(np.clip(abs(res.omega @ om), 0, 1)))
        assert err < 0.1
        assert res.fit_residual < 0.03


def test_alignment_folds_sign_and_refuses_asymmetric():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=96, Y=1.0, ny=4, periodic_x=False)
    om = np.array([0.6, 0.8])
    tr = TraceField.from_function(grid, lambda x1, x2: np.tanh(om[0] * x1 + om[1] * x2))
    ru = extract_direction(tr)
    rv = extract_direction(TraceField(grid, -tr.values))
    assert alignment_check(ru, rv) == pytest.approx(0.0, abs=1e-9)
    saddle = TraceField.from_function(grid, lambda x1, x2: np.tanh(x1) * np.tanh(x2))
    rs = extract_direction(saddle)
    with pytest.raises(HypothesisError):
        alignment_check(ru, rs)


def test_extract_direction_constant_field():
    grid = HalfSpaceGrid(n=2, L=8.0, nx=32, Y=1.0, ny=4, periodic_x=False)
    res = extract_direction(TraceField(grid, np.full(grid.x_shape, 3.0)))
    assert res.constant and res.fit_residual == 0.0
