"""Degenerate-elliptic solver on the truncated half-space, and the coupled
nonlinear boundary system.

``solve_weighted_dirichlet`` solves  div(y^a grad U) = 0  with Dirichlet
data at y = 0 and zero weighted flux at y = Y, by conjugate gradients on
the symmetric positive-definite conductivity stencil.  The preconditioner
diagonalizes the same stencil exactly (FFT or DCT across x, tridiagonal
solves in y), so CG converges in a couple of iterations while the operator
being solved stays the finite-volume stencil - an independent route from
the kernel convolution of :mod:`fraclab.extension`.

``solve_coupled_system`` couples two such harmonic lifts through nonlinear
flux conditions  -y^a1 dU/dy = F_1(u, v),  -y^a2 dV/dy = F_2(u, v)  at
y = 0, by a damped fixed-point iteration preconditioned mode-by-mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn

from .extension import dtn_flux, measure_dtn_factor
from .grids import FractionalOrder, HalfSpaceGrid, ScalarField, TraceField
from .potentials import CoupledPotential, eval_derivatives


class SolverConvergenceError(RuntimeError):
    """Linear or nonlinear iteration failed; carries the residual history."""

    def __init__(self, message: str, residuals):
        super().__init__(f"{message} (residual history: {list(residuals)})")
        self.residuals = list(residuals)


@dataclass(frozen=True)
class SolveConfig:
    linear_tol: float = 1e-10
    max_cg_iter: int = 100
    damping: float = 0.7
    picard_tol: float = 1e-6
    max_picard_iter: int = 400

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


class WeightedStencil:
    """Finite-volume conductivity stencil of div(y^a grad .) on one grid.

    Vertical conductivities are exact cell integrals (dx^n / int y^-a dy),
    horizontal ones exact dual-cell integrals of y^a, so the discrete
    energy is a consistent quadrature of int y^a |grad U|^2.
    """

    def __init__(self, grid: HalfSpaceGrid, order: FractionalOrder):
        self.grid = grid
        self.order = order
        a = order.alpha
        r = grid.y_cell_resistance(a)
        self.cv = grid.dx**grid.n / r  # (ny,) vertical links
        w = grid.y_dual_weight(a)
        self.ch = w * grid.dx ** (grid.n - 2)  # (ny+1,) horizontal factors

    def _lap_x(self, U: np.ndarray) -> np.ndarray:
        """Raw tangential 3-point second difference (mirror at walls when
        non-periodic, which is the zero-flux condition)."""
        g = self.grid
        out = np.zeros_like(U)
        for axis in range(g.n):
            if g.periodic_x:
                out += np.roll(U, -1, axis=axis) + np.roll(U, 1, axis=axis) - 2.0 * U
            else:
                up = np.roll(U, -1, axis=axis)
                dn = np.roll(U, 1, axis=axis)
                sl = [slice(None)] * U.ndim
                sl_last, sl_first = sl.copy(), sl.copy()
                sl_last[axis], sl_first[axis] = -1, 0
                up[tuple(sl_last)] = U[tuple(sl_last)]
                dn[tuple(sl_first)] = U[tuple(sl_first)]
                out += up + dn - 2.0 * U
        return out

    def apply(self, U: np.ndarray) -> np.ndarray:
        """A @ U on interior unknowns U[..., 0:ny] (levels 1..ny); the
        Dirichlet level contributes to the right-hand side instead."""
        cv, ch = self.cv, self.ch
        out = np.empty_like(U)
        # vertical part: level j has links to j-1 and j+1, none above ny
        out[..., :] = (cv + np.concatenate((cv[1:], [0.0]))) * U
        out[..., :-1] -= cv[1:] * U[..., 1:]
        out[..., 1:] -= cv[1:] * U[..., :-1]
        out -= ch[1:] * self._lap_x(U)
        return out

    def rhs(self, trace: np.ndarray) -> np.ndarray:
        b = np.zeros(self.grid.x_shape + (self.grid.ny,))
        b[..., 0] = self.cv[0] * trace
        return b

    # -- exact mode-space solve (used as the CG preconditioner) ------------

    def _to_modes(self, U: np.ndarray) -> np.ndarray:
        g = self.grid
        if g.periodic_x:
            axes = tuple(range(g.n))
            return np.fft.fftn(U, axes=axes)
        return dctn(U, type=2, norm="ortho", axes=tuple(range(g.n)))

    def _from_modes(self, M: np.ndarray) -> np.ndarray:
        g = self.grid
        if g.periodic_x:
            axes = tuple(range(g.n))
            return np.real(np.fft.ifftn(M, axes=axes))
        return idctn(M, type=2, norm="ortho", axes=tuple(range(g.n)))

    def _mode_symbols(self) -> np.ndarray:
        g = self.grid
        if g.periodic_x:
            theta = 2.0 * np.pi * np.arange(g.nx) / g.nx
        else:
            theta = np.pi * np.arange(g.nx) / g.nx
        lam1 = 2.0 - 2.0 * np.cos(theta)
        if g.n == 1:
            return lam1
        return lam1[:, None] + lam1[None, :]

    def solve_exact(self, B: np.ndarray) -> np.ndarray:
        """Direct solve of A U = B by x-diagonalization and vectorized
        Thomas elimination along y."""
        g = self.grid
        ny = g.ny
        lam = self._mode_symbols()
        Bm = self._to_modes(B)
        cv, ch = self.cv, self.ch
        diag = cv + np.concatenate((cv[1:], [0.0])) + lam[..., None] * ch[1:]
        low = -cv[1:]  # link level j -> j-1 for j = 2..ny
        # forward sweep
        cp = np.empty(Bm.shape[:-1] + (ny - 1,), dtype=Bm.dtype)
        dp = np.empty_like(Bm)
        cp[..., 0] = low[0] / diag[..., 0]
        dp[..., 0] = Bm[..., 0] / diag[..., 0]
        for j in range(1, ny):
            denom = diag[..., j] - low[j - 1] * cp[..., j - 1]
            if j < ny - 1:
                cp[..., j] = low[j] / denom
            dp[..., j] = (Bm[..., j] - low[j - 1] * dp[..., j - 1]) / denom
        # back substitution
        X = np.empty_like(Bm)
        X[..., -1] = dp[..., -1]
        for j in range(ny - 2, -1, -1):
            X[..., j] = dp[..., j] - cp[..., j] * X[..., j + 1]
        return self._from_modes(X)


def solve_weighted_dirichlet(
    trace: TraceField,
    order: FractionalOrder,
    config: SolveConfig | None = None,
    stencil: WeightedStencil | None = None,
) -> ScalarField:
    """Solve the weighted harmonic problem with the given boundary trace.

    Preconditioned CG on the SPD stencil; the mode-space preconditioner is
    exact for this operator, so the loop is a verification that the
    residual actually reaches ``linear_tol``.
    """
    config = config or SolveConfig()
    grid = trace.grid
    st = stencil or WeightedStencil(grid, order)
    b = st.rhs(trace.values)
    bnorm = np.linalg.norm(b) + 1e-300
    x = np.zeros_like(b)
    r = b.copy()
    residuals = []
    z = st.solve_exact(r)
    p = z.copy()
    rz = np.sum(r * z)
    for _ in range(config.max_cg_iter):
        resnorm = np.linalg.norm(r) / bnorm
        residuals.append(resnorm)
        if resnorm <= config.linear_tol:
            break
        Ap = st.apply(p)
        alpha = rz / np.sum(p * Ap)
        x += alpha * p
        r -= alpha * Ap
        z = st.solve_exact(r)
        rz_new = np.sum(r * z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        raise SolverConvergenceError("CG did not reach the linear tolerance", residuals)
    full = np.empty(grid.shape)
    full[..., 0] = trace.values
    full[..., 1:] = x
    return ScalarField(grid, full)


def dtn_calibration_solver(order: FractionalOrder, grid: HalfSpaceGrid) -> float:
    """Calibration factor of the stencil-solver route (measured, cached)."""
    return measure_dtn_factor(
        order, grid, lambda tr, o: solve_weighted_dirichlet(tr, o), route="solver"
    )


# -- coupled nonlinear boundary system -------------------------------------


@dataclass
class SolutionPair:
    """Converged (or honestly failed) pair of lifts with coupling data."""

    U: ScalarField
    V: ScalarField
    order1: FractionalOrder
    order2: FractionalOrder
    potential: CoupledPotential
    residual_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    damping_used: float = 0.0

    @property
    def grid(self) -> HalfSpaceGrid:
        return self.U.grid

    def traces(self):
        return self.U.trace(), self.V.trace()


def _mode_precondition(
    res: np.ndarray, grid: HalfSpaceGrid, s: float, kappa: float = 1.0, stiffness: float = 0.0
) -> np.ndarray:
    """Divide a boundary residual by (1 + stiffness + kappa * |k|^(2s))
    mode-wise - an upper bound of the flux-defect Jacobian, so the damped
    update has gain below 1 at every mode."""
    if grid.periodic_x:
        k1 = np.abs(2.0 * np.pi * np.fft.fftfreq(grid.nx, d=grid.dx))
    else:
        k1 = np.pi * np.arange(grid.nx) / (2.0 * grid.L)
    if grid.n == 1:
        kmag = k1
    else:
        kmag = np.sqrt(k1[:, None] ** 2 + k1[None, :] ** 2)
    mult = 1.0 / (1.0 + stiffness + kappa * kmag ** (2.0 * s))
    if grid.periodic_x:
        axes = tuple(range(grid.n))
        return np.real(np.fft.ifftn(mult * np.fft.fftn(res, axes=axes), axes=axes))
    axes = tuple(range(grid.n))
    return idctn(mult * dctn(res, type=2, norm="ortho", axes=axes), type=2, norm="ortho", axes=axes)


def solve_coupled_system(
    F: CoupledPotential,
    order1: FractionalOrder,
    order2: FractionalOrder,
    init_u: TraceField,
    init_v: TraceField,
    config: SolveConfig | None = None,
) -> SolutionPair:
    """Damped fixed-point iteration for the nonlinear flux coupling.

    Each sweep lifts the current traces, measures their boundary fluxes,
    and moves the traces against the preconditioned flux defect
    flux_i - F_i(u, v).  On non-finite values the damping is halved and
    the iteration restarted (at most 4 times); non-convergence raises with
    the full residual history.
    """
    config = config or SolveConfig()
    grid = init_u.grid
    st1 = WeightedStencil(grid, order1)
    st2 = WeightedStencil(grid, order2)
    kappa1 = dtn_calibration_solver(order1, grid)
    kappa2 = dtn_calibration_solver(order2, grid)
    d0 = eval_derivatives(F, init_u, init_v)
    keep0 = ~d0.mask.values
    stiffness = 1.0 + max(
        float(np.max(np.abs(d0.f11.values[keep0]), initial=0.0)),
        float(np.max(np.abs(d0.f22.values[keep0]), initial=0.0)),
        float(np.max(np.abs(d0.f12.values[keep0]), initial=0.0)),
        F.lipschitz_bound_hint or 0.0,
    )
    damping = config.damping
    last_error: SolverConvergenceError | None = None
    for _attempt in range(5):
        u = init_u.values.copy()
        v = init_v.values.copy()
        history = []
        ok = True
        U = V = None
        for it in range(config.max_picard_iter):
            U = solve_weighted_dirichlet(TraceField(grid, u), order1, config, st1)
            V = solve_weighted_dirichlet(TraceField(grid, v), order2, config, st2)
            flux1 = dtn_flux(U, order1).flux.values
            flux2 = dtn_flux(V, order2).flux.values
            d = eval_derivatives(F, TraceField(grid, u), TraceField(grid, v))
            r1 = flux1 - d.f1.values
            r2 = flux2 - d.f2.values
            scale = max(np.max(np.abs(d.f1.values)), np.max(np.abs(d.f2.values)), 1e-12)
            resnorm = max(np.max(np.abs(r1)), np.max(np.abs(r2))) / scale
            history.append(resnorm)
            if not np.isfinite(resnorm):
                ok = False
                break
            if resnorm <= config.picard_tol:
                return SolutionPair(
                    U=U,
                    V=V,
                    order1=order1,
                    order2=order2,
                    potential=F,
                    residual_history=history,
                    iterations=it + 1,
                    converged=True,
                    damping_used=damping,
                )
            u = u - damping * _mode_precondition(r1, grid, order1.s, kappa1, stiffness)
            v = v - damping * _mode_precondition(r2, grid, order2.s, kappa2, stiffness)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                ok = False
                break
        if ok:
            last_error = SolverConvergenceError(
                "coupled fixed-point iteration did not converge", history
            )
            break
        damping *= 0.5
        last_error = SolverConvergenceError(
            "coupled iteration produced non-finite values", history
        )
    raise last_error


# -- weak-form diagnostics -------------------------------------------------


def _grad_dot_integral(
    f: ScalarField, g: ScalarField, alpha: float
) -> float:
    """int y^alpha grad f . grad g over the whole box (node quadrature with
    exact dual-cell weight integrals in y)."""
    from .grids import gradient

    grid = f.grid
    gf = gradient(f)
    gg = gradient(g)
    dots = np.sum(gf * gg, axis=0)
    w = grid.y_dual_weight(alpha)
    return float(np.sum(dots * w) * grid.dx**grid.n)


def weak_form_residual(pair: SolutionPair, xi1: ScalarField, xi2: ScalarField):
    """Defect of the weak formulation against one pair of test fields.

    Returns (r1, r2): volume Dirichlet terms minus boundary coupling terms,
    one per component.
    """
    grid = pair.grid
    d = eval_derivatives(pair.potential, *pair.traces())
    area = grid.dx**grid.n
    r1 = _grad_dot_integral(pair.U, xi1, pair.order1.alpha) - float(
        np.sum(d.f1.values * xi1.values[..., 0]) * area
    )
    r2 = _grad_dot_integral(pair.V, xi2, pair.order2.alpha) - float(
        np.sum(d.f2.values * xi2.values[..., 0]) * area
    )
    return r1, r2


def linearized_identity_residual(pair: SolutionPair, axis: int, phi: ScalarField):
    """Defect of the differentiated system against one test field.

    The tangential derivative pair (U_xj, V_xj) should satisfy the
    linearized weak equations with coefficients F_11, F_12, F_22 evaluated
    along the solution; masked boundary points are skipped.
    """
    grid = pair.grid
    Uj = ScalarField(grid, grid.diff_x(pair.U.values, axis))
    Vj = ScalarField(grid, grid.diff_x(pair.V.values, axis))
    d = eval_derivatives(pair.potential, *pair.traces())
    keep = ~d.mask.values
    area = grid.dx**grid.n
    uj0 = Uj.values[..., 0]
    vj0 = Vj.values[..., 0]
    p0 = phi.values[..., 0]
    r1 = _grad_dot_integral(Uj, phi, pair.order1.alpha) - float(
        np.sum((d.f11.values * uj0 + d.f12.values * vj0)[keep] * p0[keep]) * area
    )
    r2 = _grad_dot_integral(Vj, phi, pair.order2.alpha) - float(
        np.sum((d.f12.values * uj0 + d.f22.values * vj0)[keep] * p0[keep]) * area
    )
    return r1, r2
