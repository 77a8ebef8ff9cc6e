"""End-to-end acceptance battery.

Each test exercises one headline property of the library at a fixed,
documented scale: operator equivalence of the two half-space routes,
kernel normalization, the pointwise geometric identity, the monotone and
stable energy inequalities, the universal annulus bound, energy growth,
direction extraction, the full pipeline, and report determinism.
"""

import time

import numpy as np
import pytest

from fraclab.checks import (
    DEFAULT_TOL_COEFF,
    alignment_check,
    annulus_lemma_check,
    canonical_test_basis,
    energy_growth_sweep,
    extract_direction,
    log_cutoff,
    poincare_monotone,
    slack_tolerance,
    stability_form,
    stability_min,
)
from fraclab.cli import RunConfig, random_band_field, run
from fraclab.extension import (
    PoissonKernel,
    dtn_flux,
    extend_poisson,
    kernel_normalization,
    measure_dtn_factor,
)
from fraclab.fraclap import fraclap_spectral
from fraclab.geometry import geometry_of, vertical_excess
from fraclab.grids import (
    FractionalOrder,
    HalfSpaceGrid,
    ScalarField,
    TraceField,
    default_grading,
)
from fraclab.potentials import double_well
from fraclab.solver import SolutionPair, solve_weighted_dirichlet
from fraclab import presets


def _synthetic_1d_pair(grid, angle_deg):
    om = np.array([np.sin(np.radians(angle_deg)), np.cos(np.radians(angle_deg))])
    xs = grid.x_mesh()
    t = sum(om[i] * xs[i] for i in range(grid.n))[..., None]
    decay = np.exp(-grid.y / (1.0 + grid.y))
    U = ScalarField(grid, np.tanh(t) * decay)
    V = ScalarField(grid, -np.tanh(t) * decay)
    o = FractionalOrder(0.5)
    return SolutionPair(U=U, V=V, order1=o, order2=o, potential=double_well())


# 1 ------------------------------------------------------------------------


def test_operator_equivalence_across_orders():
    """Calibrated weighted flux of the numeric extension agrees with the
    spectral multiplier |k|^(2s) on a 3-mode trace, for three orders."""
    t0 = time.perf_counter()
    for s in (0.25, 0.5, 0.75):
        order = FractionalOrder(s)
        gamma = max(2.0, default_grading(order.alpha))
        grid = HalfSpaceGrid(
            n=1, L=np.pi, nx=512, Y=20.0, ny=200, grading_gamma=gamma, periodic_x=True
        )
        trace = TraceField(
            grid, np.cos(grid.x) + 0.5 * np.cos(2 * grid.x) + 0.25 * np.cos(3 * grid.x)
        )
        U = solve_weighted_dirichlet(trace, order)
        kappa = measure_dtn_factor(order, grid, solve_weighted_dirichlet, route="solver")
        calibrated = dtn_flux(U, order).flux.values / kappa
        target = fraclap_spectral(trace, order).values
        rel = np.linalg.norm(calibrated - target) / np.linalg.norm(target)
        assert rel < 0.05, f"s={s}: relative L2 error {rel}"
    assert time.perf_counter() - t0 < 60.0


# 2 ------------------------------------------------------------------------


def test_kernel_slices_are_probability_densities():
    for alpha in (-0.5, 0.0, 0.5):
        for n in (1, 2):
            k = PoissonKernel(FractionalOrder.from_alpha(alpha), n)
            for y in (0.1, 1.0, 10.0):
                assert abs(k.slice_mass(y) - 1.0) < 1e-6


def test_classical_kernel_constant_is_one_over_pi():
    assert kernel_normalization(0.0, 1) == pytest.approx(1.0 / np.pi, abs=1e-8)


# 3 ------------------------------------------------------------------------


def test_kernel_lift_cross_validates_against_solver():
    order = FractionalOrder(0.5)
    errs = []
    for nx, ny in ((256, 128), (512, 256)):
        grid = HalfSpaceGrid(
            n=1, L=np.pi, nx=nx, Y=8.0, ny=ny, grading_gamma=2.0, periodic_x=True
        )
        trace = TraceField(grid, np.cos(2 * grid.x))
        A = extend_poisson(trace, order)
        B = solve_weighted_dirichlet(trace, order)
        errs.append(np.linalg.norm(A.values - B.values) / np.linalg.norm(B.values))
    assert errs[0] < 0.01
    assert errs[1] < 0.5 * errs[0]


# 4 ------------------------------------------------------------------------


def test_geometric_identity_on_radial_field():
    rels = []
    for nx in (64, 128):
        grid = HalfSpaceGrid(
            n=2, L=4.0, nx=nx, Y=4.0, ny=16, grading_gamma=1.0, periodic_x=False
        )
        U = ScalarField.from_function(grid, lambda x1, x2, y: x1**2 + x2**2 + 0 * y)
        geo = geometry_of(U, eps_grad=0.5)
        m = geo.interior_mask
        denom = np.sum(geo.curvature_sq_energy[m] + geo.tangential_sq[m])
        rels.append(np.sum(geo.identity_residual[m]) / denom)
        if nx == 128:
            # circles of radius r have curvature 1/r and |grad U| = 2r,
            # so the curvature energy density is the constant 4
            assert np.median(geo.curvature_sq_energy[m]) == pytest.approx(4.0, rel=0.03)
    assert rels[1] < 0.02
    assert rels[1] < 0.5 * rels[0]  # at least first-order decrease


# 5 ------------------------------------------------------------------------


def test_vertical_excess_nonnegative_for_lifted_fields():
    grid = HalfSpaceGrid(
        n=2, L=4.0, nx=48, Y=4.0, ny=24, grading_gamma=2.0, periodic_x=True
    )
    for seed in range(20):
        f = random_band_field(grid, np.random.default_rng(seed))
        ve = vertical_excess(f)
        scale = max(np.max(np.abs(ve)), 1e-30)
        # the three-point vertical stencil obeys the triangle inequality
        # only up to discretization, so allow a tiny relative slack
        assert np.min(ve) >= -1e-4 * scale, f"seed {seed}"
    # exactly one-dimensional field: the excess vanishes identically
    one_d = ScalarField.from_function(
        grid, lambda x1, x2, y: np.cos(np.pi * (0.6 * x1 + 0.8 * x2) / grid.L) * np.exp(-y)
    )
    ve = vertical_excess(one_d, eps_grad=1e-6)
    assert np.max(np.abs(ve)) < 1e-10


# 6 ------------------------------------------------------------------------


def test_monotone_energy_inequality_with_tolerance_halving(
    monotone_pair_small, monotone_pair_fine
):
    pair_fine, solve_seconds = monotone_pair_fine
    t0 = time.perf_counter()
    for R in (2.0, 4.0, 8.0):
        rep_small = poincare_monotone(monotone_pair_small, log_cutoff(R, monotone_pair_small.grid))
        rep_fine = poincare_monotone(pair_fine, log_cutoff(R, pair_fine.grid))
        assert rep_small.slack >= -rep_small.tol
        assert rep_fine.slack >= -rep_fine.tol
        # tol is proportional to dx, which halves between the two grids
        assert rep_fine.tol < 0.6 * rep_small.tol
    assert solve_seconds + (time.perf_counter() - t0) < 300.0


# 7 ------------------------------------------------------------------------


def test_stability_over_canonical_basis(monotone_pair_small):
    pair = monotone_pair_small
    basis = canonical_test_basis(pair, 4.0, size=20)
    assert len(basis) >= 20
    forms = np.array([stability_form(pair, t) for t in basis])
    tol = slack_tolerance(pair.grid, float(np.mean(np.abs(forms))))
    assert np.min(forms) >= -tol
    lam, _ = stability_min(pair, basis)
    assert lam >= -tol


# 8 ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2])
def test_annulus_inequality_universal(n):
    if n == 1:
        grid = HalfSpaceGrid(n=1, L=20.0, nx=192, Y=20.0, ny=96, grading_gamma=2.0,
                             periodic_x=False)
    else:
        grid = HalfSpaceGrid(n=2, L=18.0, nx=96, Y=18.0, ny=64, grading_gamma=2.0,
                             periodic_x=False)
    xs = grid.x_mesh()
    r2 = sum(x**2 for x in xs)[..., None] + grid.y**2
    fields = [
        ScalarField(grid, np.ones(grid.shape)),
        ScalarField(grid, np.exp(-r2 / 8.0)),
    ]
    for seed in range(20):
        rng = np.random.default_rng(seed)
        fields.append(ScalarField(grid, rng.uniform(0.0, 1.0, grid.shape)))
    for h in fields:
        for R in (4.0, 9.0, 16.0):
            rep = annulus_lemma_check(h, R)
            assert rep.satisfied and rep.slack > 0.0


# 9 ------------------------------------------------------------------------


def test_layer_pair_energy_growth_subquadratic_log(monotone_pair_fine):
    pair, _ = monotone_pair_fine
    table = energy_growth_sweep(pair, [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0])
    assert table.slope_U <= 2.15
    assert table.slope_V <= 2.15


# 10 -----------------------------------------------------------------------


def test_exact_one_dimensional_pair_mechanics():
    grid = HalfSpaceGrid(
        n=2, L=8.0, nx=96, Y=8.0, ny=24, grading_gamma=2.0, periodic_x=False
    )
    angle = 20.0
    pair = _synthetic_1d_pair(grid, angle)
    for R in (2.0, 4.0, 8.0):
        rep = poincare_monotone(pair, log_cutoff(R, grid))
        assert rep.lhs_total <= rep.tol
    om = np.array([np.sin(np.radians(angle)), np.cos(np.radians(angle))])
    ru = extract_direction(TraceField(grid, pair.U.values[..., 0]))
    rv = extract_direction(TraceField(grid, pair.V.values[..., 0]))
    err = np.degrees(np.arccos(np.clip(abs(ru.omega @ om), 0.0, 1.0)))
    assert err < 0.1
    # V = -U: the folded alignment angle collapses to zero
    assert alignment_check(ru, rv) == pytest.approx(0.0, abs=1e-9)


# 11 -----------------------------------------------------------------------


def test_pipeline_alignment_on_coupled_preset(tmp_path):
    report = run(
        RunConfig.from_dict(presets.get("pipeline-symmetry")),
        out_dir=str(tmp_path),
        quiet=True,
    )
    assert report["passed"]
    sym = report["results"]["symmetry"]
    assert sym["fit_residual_u"] < 0.05
    assert sym["fit_residual_v"] < 0.05
    assert sym["alignment_angle_deg"] < 2.0


# 12 -----------------------------------------------------------------------


def test_every_preset_is_deterministic(tmp_path):
    for name in presets.PRESETS:
        hashes = []
        for rep in ("a", "b"):
            out = tmp_path / name / rep
            report = run(RunConfig.from_dict(presets.get(name)),
                         out_dir=str(out), quiet=True)
            hashes.append(report["report_hash"])
        assert hashes[0] == hashes[1], f"preset {name} is not deterministic"
