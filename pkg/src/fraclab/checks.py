"""Energy inequalities, stability forms, and symmetry diagnostics.

Every check returns a report with the measured left- and right-hand sides
and an explicit discretization tolerance ``tol = tol_coeff * dx * scale``;
``satisfied`` always means ``slack >= -tol``.  Hypotheses (monotonicity,
coupling sign, stability evidence) are machine-checked where possible and
must be supplied explicitly where not.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

from .geometry import default_eps_grad, geometry_of
from .grids import (
    HalfBallRegion,
    HalfSpaceGrid,
    OutOfDomainError,
    ScalarField,
    TraceField,
    gradient,
    gradient_x,
    weighted_volume_integral_values,
)
from .potentials import eval_derivatives, sign_condition
from .solver import SolutionPair

#: calibrated once on the exactly-1D synthetic pair (see the test suite):
#: the measured slack defect there is below 0.5 * dx * scale on every grid
DEFAULT_TOL_COEFF = 0.5


class HypothesisError(ValueError):
    """A check was invoked without its structural hypotheses."""


def slack_tolerance(grid: HalfSpaceGrid, scale: float, tol_coeff: float = DEFAULT_TOL_COEFF) -> float:
    """Discretization tolerance for inequality slacks: first-order in the
    tangential spacing, proportional to the magnitude of the terms."""
    return tol_coeff * grid.dx * abs(scale)


# -- test functions ---------------------------------------------------------


@dataclass(frozen=True)
class TestFunctionPair:
    """Compactly supported test pair (xi1, xi2) vanishing outside B_R^+."""

    __test__ = False  # not a pytest collection target

    xi1: ScalarField
    xi2: ScalarField
    radius: float

    def __post_init__(self):
        if self.xi1.grid is not self.xi2.grid and self.xi1.grid != self.xi2.grid:
            raise ValueError("test pair components live on different grids")
        grid = self.xi1.grid
        if self.radius <= 0 or self.radius > min(grid.L, grid.Y):
            raise OutOfDomainError(
                f"support radius {self.radius} does not fit the grid "
                f"(L={grid.L}, Y={grid.Y})"
            )
        r2 = _dist2(grid)
        outside = r2 > self.radius**2 * (1.0 + 1e-12)
        for xi in (self.xi1, self.xi2):
            if np.any(xi.values[outside] != 0.0):
                raise ValueError("test function does not vanish outside its ball")

    @property
    def grid(self) -> HalfSpaceGrid:
        return self.xi1.grid


@lru_cache(maxsize=4096)
def _region(grid: HalfSpaceGrid, radius: float) -> HalfBallRegion:
    """Cell-weight tables of half-balls are pure functions of (grid, R);
    cache them across the many nested-radius sweeps below."""
    return HalfBallRegion(grid, radius)


def _dist2(grid: HalfSpaceGrid) -> np.ndarray:
    xs = grid.x_mesh()
    d2 = sum(c[..., None] ** 2 for c in xs)
    return d2 + grid.y[None, :] ** 2 if grid.n == 1 else d2 + grid.y**2


def _smooth_bump(q: np.ndarray) -> np.ndarray:
    """C^2 compactly supported profile (1 - q^2)^3 on |q| < 1."""
    return np.where(np.abs(q) < 1.0, (1.0 - np.clip(q, -1.0, 1.0) ** 2) ** 3, 0.0)


def radial_bump(grid: HalfSpaceGrid, center: float, width: float) -> ScalarField:
    """Bump in |X| = sqrt(|x|^2 + y^2) supported on (center - width,
    center + width) intersected with the half-space."""
    r = np.sqrt(_dist2(grid))
    return ScalarField(grid, _smooth_bump((r - center) / width))


def ball_cutoff(grid: HalfSpaceGrid, R: float) -> ScalarField:
    """Smooth cutoff equal to (1 - (|X|/R)^2)^3 on B_R^+, 0 outside."""
    r = np.sqrt(_dist2(grid))
    return ScalarField(grid, _smooth_bump(r / R))


def log_cutoff(R: float, grid: HalfSpaceGrid) -> ScalarField:
    """Logarithmic cutoff: 1 on B_sqrt(R), 2*log(R/|X|)/log(R) on the
    annulus, 0 outside B_R.  Requires R > 1 (so the annulus is nonempty)
    and R <= min(L, Y)."""
    if R <= 1.0:
        raise ValueError(f"log cutoff needs R > 1, got {R}")
    if R > min(grid.L, grid.Y):
        raise OutOfDomainError(f"cutoff radius {R} exceeds grid extent")
    r = np.sqrt(np.maximum(_dist2(grid), 1e-300))
    vals = np.clip(2.0 * (np.log(R) - np.log(r)) / np.log(R), 0.0, 1.0)
    return ScalarField(grid, vals)


def canonical_test_basis(
    pair: SolutionPair, R: float, size: int = 20, independence: float = 0.1
) -> list[TestFunctionPair]:
    """Standard battery of compactly supported test pairs in B_R^+.

    Proof-critical pairs built from the solution itself come first (the
    tangential gradient magnitude and each tangential derivative, times a
    smooth ball cutoff), then radial bumps with polynomial modulations.
    Candidates that are numerically dependent on earlier members (residual
    after projection below ``independence``) are dropped, so the returned
    basis always has a well-conditioned Gram matrix.
    """
    grid = pair.grid
    zero = np.zeros(grid.shape)
    phi = ball_cutoff(grid, R).values

    def candidates():
        gU = np.sqrt(np.sum(gradient_x(pair.U) ** 2, axis=0))
        gV = np.sqrt(np.sum(gradient_x(pair.V) ** 2, axis=0))
        yield gU * phi, zero
        yield zero, gV * phi
        yield gU * phi, gV * phi
        for axis in range(grid.n):
            du = grid.diff_x(pair.U.values, axis) * phi
            dv = grid.diff_x(pair.V.values, axis) * phi
            yield du, dv
            yield du, zero
            yield zero, dv
        xs = grid.x_mesh()
        yv = grid.y[None, :] if grid.n == 1 else grid.y
        mods = [np.ones(grid.shape)] + [c[..., None] / R for c in xs] + [yv / R]
        n_centers = 6
        for variant, mod in enumerate(mods):
            for k in range(n_centers):
                c = R * (k + 0.5) / n_centers
                b = radial_bump(grid, c, 1.5 * R / n_centers).values * phi * mod
                yield b, zero
                yield zero, b
                if variant == 0:
                    yield b, b

    out: list[TestFunctionPair] = []
    ortho: list[np.ndarray] = []
    for f1, f2 in candidates():
        if len(out) >= size:
            break
        v = np.concatenate((f1.ravel(), f2.ravel()))
        nrm = np.linalg.norm(v)
        if nrm < 1e-14:
            continue
        v = v / nrm
        for q in ortho:
            v -= np.dot(q, v) * q
        rnorm = np.linalg.norm(v)
        if rnorm < independence:
            continue
        ortho.append(v / rnorm)
        out.append(
            TestFunctionPair(ScalarField(grid, f1.copy()), ScalarField(grid, f2.copy()), R)
        )
    if len(out) < size:
        raise ValueError(
            f"could only assemble {len(out)} independent test pairs (asked for {size}); "
            "enlarge the ball or relax the independence threshold"
        )
    return out


# -- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs_curvature_U: float
    lhs_tangential_U: float
    lhs_curvature_V: float
    lhs_tangential_V: float
    rhs_gradient: float
    coupling_term: float
    slack: float  # rhs + coupling - lhs
    tol: float
    satisfied: bool
    excluded_points: int = 0
    hypotheses: dict = field(default_factory=dict)

    @property
    def lhs_total(self) -> float:
        return (
            self.lhs_curvature_U
            + self.lhs_tangential_U
            + self.lhs_curvature_V
            + self.lhs_tangential_V
        )


@dataclass(frozen=True)
class MonotonicityResult:
    monotone: bool
    margin: float  # min(min U_xn, -max V_xn) over the whole box
    axis: int


@dataclass(frozen=True)
class SymmetryResult:
    omega: np.ndarray  # unit direction in the x-plane
    profile_t: np.ndarray  # arc-length coordinate bins
    profile_values: np.ndarray  # reconstructed 1D profile at y = 0
    fit_residual: float  # relative L2 misfit of the 1D reconstruction
    constant: bool


# -- quadrature helpers -----------------------------------------------------


def _volume_quad(grid: HalfSpaceGrid, values: np.ndarray, alpha: float) -> float:
    """int y^alpha * values over the whole box (node quadrature, exact dual
    weights in y)."""
    w = grid.y_dual_weight(alpha)
    return float(np.sum(values * w) * grid.dx**grid.n)


def _boundary_quad(grid: HalfSpaceGrid, values: np.ndarray) -> float:
    return float(np.sum(values) * grid.dx**grid.n)


def monotonicity_check(pair: SolutionPair, axis: int | None = None) -> MonotonicityResult:
    """Strict monotone-pair test: U increasing and V decreasing along one
    tangential axis (the last one by default), margin included."""
    grid = pair.grid
    if axis is None:
        axis = grid.n - 1
    du = grid.diff_x(pair.U.values, axis)
    dv = grid.diff_x(pair.V.values, axis)
    if not grid.periodic_x:
        # one-sided wall stencils are first-order; judge on interior planes
        sl = [slice(None)] * du.ndim
        sl[axis] = slice(1, -1)
        du, dv = du[tuple(sl)], dv[tuple(sl)]
    margin = float(min(np.min(du), -np.max(dv)))
    return MonotonicityResult(monotone=margin > 0.0, margin=margin, axis=axis)


# -- stability forms --------------------------------------------------------


def _stability_bilinear(
    pair: SolutionPair, t1: TestFunctionPair, t2: TestFunctionPair, d=None
) -> float:
    grid = pair.grid
    if d is None:
        d = eval_derivatives(pair.potential, *pair.traces())
    keep = ~d.mask.values
    a1, a2 = pair.order1.alpha, pair.order2.alpha
    g11 = np.sum(gradient(t1.xi1) * gradient(t2.xi1), axis=0)
    g22 = np.sum(gradient(t1.xi2) * gradient(t2.xi2), axis=0)
    vol = _volume_quad(grid, g11, a1) + _volume_quad(grid, g22, a2)
    x1a, x2a = t1.xi1.values[..., 0], t1.xi2.values[..., 0]
    x1b, x2b = t2.xi1.values[..., 0], t2.xi2.values[..., 0]
    bnd = (
        d.f11.values * x1a * x1b
        + d.f22.values * x2a * x2b
        + d.f12.values * (x1a * x2b + x2a * x1b)
    )
    return vol - _boundary_quad(grid, np.where(keep, bnd, 0.0))


def stability_form(pair: SolutionPair, test: TestFunctionPair) -> float:
    """Second-variation quadratic form Q(xi1, xi2): weighted Dirichlet
    energies minus the boundary Hessian coupling (masked points skipped)."""
    return _stability_bilinear(pair, test, test)


def _gram_bilinear(pair: SolutionPair, t1: TestFunctionPair, t2: TestFunctionPair) -> float:
    grid = pair.grid
    a1, a2 = pair.order1.alpha, pair.order2.alpha
    g11 = np.sum(gradient(t1.xi1) * gradient(t2.xi1), axis=0) + t1.xi1.values * t2.xi1.values
    g22 = np.sum(gradient(t1.xi2) * gradient(t2.xi2), axis=0) + t1.xi2.values * t2.xi2.values
    return _volume_quad(grid, g11, a1) + _volume_quad(grid, g22, a2)


def stability_min(pair: SolutionPair, basis: list[TestFunctionPair]):
    """Smallest generalized eigenvalue of the stability form against the
    weighted-H^1 Gram matrix of the basis.

    Returns (lambda_min, coefficients).  A numerically singular Gram matrix
    (dependent basis) is an error, not a zero."""
    m = len(basis)
    if m == 0:
        raise ValueError("empty test basis")
    grid = pair.grid
    d = eval_derivatives(pair.potential, *pair.traces())
    keep = ~d.mask.values
    a1, a2 = pair.order1.alpha, pair.order2.alpha
    g1 = [gradient(t.xi1) for t in basis]
    g2 = [gradient(t.xi2) for t in basis]
    A = np.empty((m, m))
    G = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            d11 = np.sum(g1[i] * g1[j], axis=0)
            d22 = np.sum(g2[i] * g2[j], axis=0)
            vol = _volume_quad(grid, d11, a1) + _volume_quad(grid, d22, a2)
            x1a, x2a = basis[i].xi1.values[..., 0], basis[i].xi2.values[..., 0]
            x1b, x2b = basis[j].xi1.values[..., 0], basis[j].xi2.values[..., 0]
            bnd = (
                d.f11.values * x1a * x1b
                + d.f22.values * x2a * x2b
                + d.f12.values * (x1a * x2b + x2a * x1b)
            )
            A[i, j] = A[j, i] = vol - _boundary_quad(grid, np.where(keep, bnd, 0.0))
            mass = (
                basis[i].xi1.values * basis[j].xi1.values,
                basis[i].xi2.values * basis[j].xi2.values,
            )
            G[i, j] = G[j, i] = _volume_quad(grid, d11 + mass[0], a1) + _volume_quad(
                grid, d22 + mass[1], a2
            )
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(
            f"test basis is numerically dependent (Gram condition {cond:.3g}); "
            "remove near-duplicate test functions"
        )
    vals, vecs = scipy.linalg.eigh(A, G)
    return float(vals[0]), vecs[:, 0]


def linearized_rayleigh(pair: SolutionPair, xi: ScalarField, which: str, eps_grad: float | None = None) -> float:
    """Rayleigh slack of one component of the linearized system:

        int y^alpha |grad xi|^2  -  int (F_11 + F_12 V_xn / U_xn) xi^2

    for 'U' (and the reciprocal ratio for 'V').  Requires a strictly
    monotone pair; near-degenerate ratio points are excluded."""
    if which not in ("U", "V"):
        raise ValueError("which must be 'U' or 'V'")
    grid = pair.grid
    mono = monotonicity_check(pair)
    if not mono.monotone:
        raise HypothesisError(
            f"linearized Rayleigh quotient needs a monotone pair (margin {mono.margin:.3g})"
        )
    if eps_grad is None:
        eps_grad = max(default_eps_grad(pair.U), default_eps_grad(pair.V))
    axis = mono.axis
    un = grid.diff_x(pair.U.values, axis)[..., 0]
    vn = grid.diff_x(pair.V.values, axis)[..., 0]
    d = eval_derivatives(pair.potential, *pair.traces())
    keep = ~d.mask.values
    thresh = 10.0 * eps_grad
    if which == "U":
        ok = keep & (np.abs(un) > thresh)
        coeff = d.f11.values + d.f12.values * np.where(ok, vn / np.where(ok, un, 1.0), 0.0)
        alpha = pair.order1.alpha
    else:
        ok = keep & (np.abs(vn) > thresh)
        coeff = d.f22.values + d.f12.values * np.where(ok, un / np.where(ok, vn, 1.0), 0.0)
        alpha = pair.order2.alpha
    energy = _volume_quad(grid, np.sum(gradient(xi) ** 2, axis=0), alpha)
    bnd = _boundary_quad(grid, np.where(ok, coeff, 0.0) * xi.values[..., 0] ** 2)
    return energy - bnd


# -- the two Poincare-type inequalities ------------------------------------


def _geometry_lhs(pair: SolutionPair, phi: ScalarField, eps_grad: float | None):
    grid = pair.grid
    p2 = phi.values**2
    parts = {}
    for tag, f, alpha in (("U", pair.U, pair.order1.alpha), ("V", pair.V, pair.order2.alpha)):
        geo = geometry_of(f, eps_grad)
        parts[f"curv_{tag}"] = _volume_quad(grid, geo.curvature_sq_energy * p2, alpha)
        parts[f"tan_{tag}"] = _volume_quad(grid, geo.tangential_sq * p2, alpha)
    return parts


def _rhs_gradient(pair: SolutionPair, phi: ScalarField) -> float:
    grid = pair.grid
    gphi2 = np.sum(gradient(phi) ** 2, axis=0)
    gU2 = np.sum(gradient_x(pair.U) ** 2, axis=0)
    gV2 = np.sum(gradient_x(pair.V) ** 2, axis=0)
    return _volume_quad(grid, gU2 * gphi2, pair.order1.alpha) + _volume_quad(
        grid, gV2 * gphi2, pair.order2.alpha
    )


def poincare_monotone(
    pair: SolutionPair,
    phi: ScalarField,
    eps_grad: float | None = None,
    tol_coeff: float = DEFAULT_TOL_COEFF,
) -> InequalityReport:
    """Curvature/tangential-energy bound for monotone pairs.

    LHS: weighted curvature + tangential level-set energies under phi^2.
    RHS: weighted tangential-gradient energies against |grad phi|^2, plus
    the boundary coupling term

        int F_12 | sqrt(-V_xn/U_xn) grad_x u + sqrt(U_xn/(-V_xn)) grad_x v |^2 phi^2,

    whose sign combines the monotonicity ratio with the sign of F_12.
    Points where either slope is below 10*eps_grad are excluded (counted)."""
    grid = pair.grid
    mono = monotonicity_check(pair)
    if not mono.monotone:
        raise HypothesisError(
            f"monotone energy bound requires a monotone pair (margin {mono.margin:.3g})"
        )
    if eps_grad is None:
        eps_grad = max(default_eps_grad(pair.U), default_eps_grad(pair.V))
    parts = _geometry_lhs(pair, phi, eps_grad)
    rhs = _rhs_gradient(pair, phi)

    axis = mono.axis
    un = grid.diff_x(pair.U.values, axis)[..., 0]
    vn = grid.diff_x(pair.V.values, axis)[..., 0]
    d = eval_derivatives(pair.potential, *pair.traces())
    keep = ~d.mask.values
    thresh = 10.0 * eps_grad
    ok = keep & (un > thresh) & (-vn > thresh)
    excluded = int(np.count_nonzero(keep & ~ok))
    ratio = np.where(ok, -vn / np.where(ok, un, 1.0), 0.0)
    gU0 = np.stack([grid.diff_x(pair.U.values, j)[..., 0] for j in range(grid.n)])
    gV0 = np.stack([grid.diff_x(pair.V.values, j)[..., 0] for j in range(grid.n)])
    sq = np.sum(
        (np.sqrt(ratio) * gU0 + np.sqrt(np.where(ok, 1.0 / np.where(ok, ratio, 1.0), 0.0)) * gV0)
        ** 2,
        axis=0,
    )
    coupling = _boundary_quad(
        grid, np.where(ok, d.f12.values * sq, 0.0) * phi.values[..., 0] ** 2
    )

    lhs = sum(parts.values())
    scale = abs(rhs) + abs(coupling) + abs(lhs)
    tol = slack_tolerance(grid, scale, tol_coeff)
    slack = rhs + coupling - lhs
    return InequalityReport(
        name="poincare_monotone",
        lhs_curvature_U=parts["curv_U"],
        lhs_tangential_U=parts["tan_U"],
        lhs_curvature_V=parts["curv_V"],
        lhs_tangential_V=parts["tan_V"],
        rhs_gradient=rhs,
        coupling_term=coupling,
        slack=slack,
        tol=tol,
        satisfied=slack >= -tol,
        excluded_points=excluded,
        hypotheses={"monotone_margin": mono.margin},
    )


def poincare_stable(
    pair: SolutionPair,
    phi: ScalarField,
    stability_evidence: float | None = None,
    eps_grad: float | None = None,
    tol_coeff: float = DEFAULT_TOL_COEFF,
) -> InequalityReport:
    """Curvature/tangential-energy bound for stable pairs.

    Same LHS and gradient RHS as the monotone bound; the coupling term is

        -2 int F_12 (|grad_x u| |grad_x v| - grad_x u . grad_x v) phi^2,

    nonpositive whenever F_12 >= 0.  Stability itself is evidence recorded
    in the report (pass the measured ``stability_min``), not re-derived."""
    grid = pair.grid
    if eps_grad is None:
        eps_grad = max(default_eps_grad(pair.U), default_eps_grad(pair.V))
    parts = _geometry_lhs(pair, phi, eps_grad)
    rhs = _rhs_gradient(pair, phi)

    d = eval_derivatives(pair.potential, *pair.traces())
    keep = ~d.mask.values
    gU0 = np.stack([grid.diff_x(pair.U.values, j)[..., 0] for j in range(grid.n)])
    gV0 = np.stack([grid.diff_x(pair.V.values, j)[..., 0] for j in range(grid.n)])
    dot = np.sum(gU0 * gV0, axis=0)
    mags = np.sqrt(np.sum(gU0**2, axis=0) * np.sum(gV0**2, axis=0))
    coupling = -2.0 * _boundary_quad(
        grid, np.where(keep, d.f12.values * (mags - dot), 0.0) * phi.values[..., 0] ** 2
    )

    lhs = sum(parts.values())
    scale = abs(rhs) + abs(coupling) + abs(lhs)
    tol = slack_tolerance(grid, scale, tol_coeff)
    slack = rhs + coupling - lhs
    hyp = {}
    if stability_evidence is not None:
        hyp["stability_min"] = float(stability_evidence)
    return InequalityReport(
        name="poincare_stable",
        lhs_curvature_U=parts["curv_U"],
        lhs_tangential_U=parts["tan_U"],
        lhs_curvature_V=parts["curv_V"],
        lhs_tangential_V=parts["tan_V"],
        rhs_gradient=rhs,
        coupling_term=coupling,
        slack=slack,
        tol=tol,
        satisfied=slack >= -tol,
        excluded_points=int(np.count_nonzero(~keep)),
        hypotheses=hyp,
    )


# -- energy growth and annulus bounds --------------------------------------


@dataclass(frozen=True)
class EnergyGrowthTable:
    radii: np.ndarray
    energy_U: np.ndarray
    energy_V: np.ndarray
    slope_U: float  # log-log least-squares slope
    slope_V: float


def ball_energy(f: ScalarField, alpha: float, R: float) -> float:
    """Weighted Dirichlet energy int_{B_R^+} y^alpha |grad f|^2."""
    grid = f.grid
    region = _region(grid, R)
    g2 = np.sum(gradient(f) ** 2, axis=0)
    return weighted_volume_integral_values(grid, g2, alpha, region)


def energy_growth_sweep(pair: SolutionPair, radii) -> EnergyGrowthTable:
    """Weighted energies of both components over nested half-balls and
    their log-log growth slopes."""
    radii = np.asarray(sorted(radii), dtype=float)
    if len(radii) < 2:
        raise ValueError("need at least two radii for a growth slope")
    eU = np.array([ball_energy(pair.U, pair.order1.alpha, R) for R in radii])
    eV = np.array([ball_energy(pair.V, pair.order2.alpha, R) for R in radii])
    if np.any(eU <= 0) or np.any(eV <= 0):
        raise ValueError("nonpositive ball energy; field is degenerate at these radii")
    slope_U = float(np.polyfit(np.log(radii), np.log(eU), 1)[0])
    slope_V = float(np.polyfit(np.log(radii), np.log(eV), 1)[0])
    return EnergyGrowthTable(radii, eU, eV, slope_U, slope_V)


@dataclass(frozen=True)
class AnnulusReport:
    R: float
    lhs: float  # int_{B_R^+ \ B_sqrt(R)^+} h / |X|^2
    rhs: float  # 2 int_sqrt(R)^R eta(t)/t^3 dt + eta(R)/R^2
    slack: float
    satisfied: bool


def annulus_lemma_check(h: ScalarField, R: float, n_eta: int = 96) -> AnnulusReport:
    """Dyadic-annulus bound: the integral of h/|X|^2 over the annulus
    between radii sqrt(R) and R is controlled by the running ball mass
    eta(t) = int_{B_t^+} h via  2 int eta(t)/t^3 dt + eta(R)/R^2.

    h must be nonnegative; R must satisfy sqrt(R) >= 1 (so R >= 1) and fit
    the grid."""
    grid = h.grid
    if np.any(h.values < 0):
        raise ValueError("annulus bound requires a nonnegative density")
    if R <= 1.0:
        raise ValueError(f"annulus bound needs R > 1, got {R}")
    root = np.sqrt(R)
    d2 = np.maximum(_dist2(grid), 1e-300)
    inv = ScalarField(grid, h.values / d2)
    big = _region(grid, R)
    small = _region(grid, root)
    lhs = weighted_volume_integral_values(
        grid, inv.values, 0.0, big
    ) - weighted_volume_integral_values(grid, inv.values, 0.0, small)

    ts = np.linspace(root, R, n_eta)
    eta = np.array(
        [weighted_volume_integral_values(grid, h.values, 0.0, _region(grid, t)) for t in ts]
    )
    rhs = 2.0 * float(np.trapezoid(eta / ts**3, ts)) + eta[-1] / R**2
    slack = rhs - lhs
    return AnnulusReport(R=R, lhs=lhs, rhs=rhs, slack=slack, satisfied=slack >= 0.0)


# -- the symmetry-decay experiment ------------------------------------------


@dataclass(frozen=True)
class DecayRow:
    R: float
    lhs_inner: float  # curvature + tangential energies over B_sqrt(R)^+
    rhs_exact: float  # gradient RHS with the log cutoff phi_R
    rhs_annulus_bound: float  # 4/(log R)^2 * annulus integral of energy/|X|^2


@dataclass(frozen=True)
class DecayTable:
    rows: list
    fitted_constant: float  # C in lhs ~ C / log(R)
    hypotheses: dict


def symmetry_decay_experiment(
    pair: SolutionPair,
    radii,
    stability_evidence: float | None = None,
    eps_grad: float | None = None,
) -> DecayTable:
    """Decay of the inner level-set energies under growing log cutoffs.

    Requires one of the two structural regimes: (monotone pair, F_12 <= 0)
    or (stability evidence, F_12 >= 0); refuses otherwise.  For each R the
    inner energy over B_sqrt(R)^+ is tabulated against the exact cutoff
    RHS and the 1/(log R)^2 annulus bound."""
    grid = pair.grid
    if eps_grad is None:
        eps_grad = max(default_eps_grad(pair.U), default_eps_grad(pair.V))
    d = eval_derivatives(pair.potential, *pair.traces())
    mono = monotonicity_check(pair)
    nonpos, _ = sign_condition(d.f12, d.mask, "nonpos")
    nonneg, _ = sign_condition(d.f12, d.mask, "nonneg")
    mono_regime = mono.monotone and nonpos
    stable_regime = (
        stability_evidence is not None and stability_evidence >= 0.0 and nonneg
    )
    if not (mono_regime or stable_regime):
        raise HypothesisError(
            "decay experiment needs (monotone pair and F_12 <= 0) or "
            "(stability evidence and F_12 >= 0); got "
            f"monotone={mono.monotone}, F12<=0: {nonpos}, F12>=0: {nonneg}, "
            f"stability evidence={stability_evidence}"
        )

    rows = []
    for R in sorted(radii):
        phi = log_cutoff(R, grid)
        root = np.sqrt(R)
        inner = 0.0
        for f, alpha in ((pair.U, pair.order1.alpha), (pair.V, pair.order2.alpha)):
            geo = geometry_of(f, eps_grad)
            region = _region(grid, root)
            inner += weighted_volume_integral_values(
                grid, geo.curvature_sq_energy + geo.tangential_sq, alpha, region
            )
        rhs = _rhs_gradient(pair, phi)
        d2 = np.maximum(_dist2(grid), 1e-300)
        gU2 = np.sum(gradient_x(pair.U) ** 2, axis=0)
        gV2 = np.sum(gradient_x(pair.V) ** 2, axis=0)
        big, small = _region(grid, R), _region(grid, root)
        ann = 0.0
        for g2, alpha in ((gU2, pair.order1.alpha), (gV2, pair.order2.alpha)):
            ann += weighted_volume_integral_values(
                grid, g2 / d2, alpha, big
            ) - weighted_volume_integral_values(grid, g2 / d2, alpha, small)
        rows.append(
            DecayRow(
                R=float(R),
                lhs_inner=inner,
                rhs_exact=rhs,
                rhs_annulus_bound=4.0 / np.log(R) ** 2 * ann,
            )
        )
    logs = np.array([1.0 / np.log(r.R) for r in rows])
    lhss = np.array([r.lhs_inner for r in rows])
    denom = float(np.sum(logs**2))
    fitted = float(np.sum(lhss * logs) / denom) if denom > 0 else np.nan
    return DecayTable(
        rows=rows,
        fitted_constant=fitted,
        hypotheses={
            "monotone": mono.monotone,
            "f12_nonpos": nonpos,
            "f12_nonneg": nonneg,
            "stability_evidence": stability_evidence,
        },
    )


# -- one-dimensional symmetry extraction ------------------------------------


def extract_direction(trace: TraceField) -> SymmetryResult:
    """Principal direction of the gradient covariance of a planar trace,
    with the reconstructed 1D profile along it and the relative misfit.

    A trace whose total variation is negligible is flagged constant (any
    direction is symmetric then)."""
    grid = trace.grid
    if grid.n != 2:
        raise ValueError("direction extraction is defined for n = 2 traces")
    u = trace.values
    scale = float(np.max(np.abs(u)) + np.max(u) - np.min(u))
    g = np.stack([grid.diff_x(u, 0), grid.diff_x(u, 1)])
    if float(np.max(np.abs(g))) <= 1e-12 * max(scale, 1e-30):
        return SymmetryResult(
            omega=np.array([1.0, 0.0]),
            profile_t=np.array([0.0]),
            profile_values=np.array([float(np.mean(u))]),
            fit_residual=0.0,
            constant=True,
        )
    M = np.array(
        [
            [np.sum(g[0] * g[0]), np.sum(g[0] * g[1])],
            [np.sum(g[0] * g[1]), np.sum(g[1] * g[1])],
        ]
    )
    vals, vecs = np.linalg.eigh(M)
    omega = vecs[:, -1]
    if omega[0] < 0 or (omega[0] == 0 and omega[1] < 0):
        omega = -omega

    x1, x2 = grid.x_mesh()
    t = omega[0] * x1 + omega[1] * x2
    nb = 2 * grid.nx
    edges = np.linspace(np.min(t), np.max(t) * (1 + 1e-12), nb + 1)
    idx = np.clip(np.digitize(t.ravel(), edges) - 1, 0, nb - 1)
    counts = np.bincount(idx, minlength=nb)
    sums = np.bincount(idx, weights=u.ravel(), minlength=nb)
    centers = 0.5 * (edges[:-1] + edges[1:])
    filled = counts > 0
    prof = np.interp(centers, centers[filled], sums[filled] / counts[filled])
    recon = np.interp(t.ravel(), centers, prof).reshape(u.shape)
    osc = float(np.linalg.norm(u - np.mean(u)))
    resid = float(np.linalg.norm(u - recon)) / max(osc, 1e-30)
    return SymmetryResult(
        omega=omega,
        profile_t=centers,
        profile_values=prof,
        fit_residual=resid,
        constant=False,
    )


def alignment_check(
    result_u: SymmetryResult, result_v: SymmetryResult, threshold: float = 0.05
) -> float:
    """Angle (degrees) between two extracted symmetry directions, folded
    over the omega -> -omega ambiguity.  Refuses if either field is not
    one-dimensionally symmetric to within the misfit threshold."""
    for tag, r in (("first", result_u), ("second", result_v)):
        if not r.constant and r.fit_residual > threshold:
            raise HypothesisError(
                f"{tag} trace is not 1D-symmetric (misfit {r.fit_residual:.3g} "
                f"> {threshold}); alignment between non-symmetric fields is undefined"
            )
    if result_u.constant or result_v.constant:
        return 0.0
    c = float(np.clip(abs(np.dot(result_u.omega, result_v.omega)), 0.0, 1.0))
    return float(np.degrees(np.arccos(c)))
