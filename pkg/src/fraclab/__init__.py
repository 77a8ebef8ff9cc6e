"""Weighted half-space extensions, fractional Dirichlet-to-Neumann maps,
and level-set energy checks for coupled boundary systems."""

__version__ = "0.1.0"

from .grids import (
    FractionalOrder,
    HalfBallRegion,
    HalfSpaceGrid,
    OutOfDomainError,
    ScalarField,
    TraceField,
    boundary_integral,
    default_grading,
    gradient,
    gradient_x,
    weighted_volume_integral,
)
from .potentials import (
    BUILTINS,
    CoupledPotential,
    DerivativeFields,
    NondiffMask,
    coupled_double_well,
    double_well,
    eval_derivatives,
    make_potential,
    sign_condition,
)
from .fraclap import (
    NormalizationRatio,
    PVQuadratureConfig,
    fraclap_pv,
    fraclap_spectral,
    pv_normalization_ratio,
)
from .extension import (
    DtnResult,
    PoissonKernel,
    dtn_calibration,
    dtn_flux,
    extend_poisson,
    kernel_normalization,
    measure_dtn_factor,
)
from .solver import (
    SolutionPair,
    SolveConfig,
    SolverConvergenceError,
    WeightedStencil,
    solve_coupled_system,
    solve_weighted_dirichlet,
    weak_form_residual,
)
from .geometry import (
    GeometryFields,
    curvature_divergence,
    default_eps_grad,
    geometry_of,
    vertical_excess,
)
from .checks import (
    AnnulusReport,
    DecayTable,
    EnergyGrowthTable,
    HypothesisError,
    InequalityReport,
    MonotonicityResult,
    SymmetryResult,
    TestFunctionPair,
    alignment_check,
    ball_cutoff,
    radial_bump,
    slack_tolerance,
    annulus_lemma_check,
    ball_energy,
    canonical_test_basis,
    energy_growth_sweep,
    extract_direction,
    linearized_rayleigh,
    log_cutoff,
    monotonicity_check,
    poincare_monotone,
    poincare_stable,
    stability_form,
    stability_min,
    symmetry_decay_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
