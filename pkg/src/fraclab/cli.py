"""Command-line entry point: config parsing, pipeline orchestration, and
deterministic report emission.

One run = one config document (JSON) naming a command plus parameter
blocks.  Every run writes ``report.json`` (schema versioned, content
hashed with timings excluded) and command-specific CSV / field-container
artifacts into the output directory, all atomically.

Exit codes: 0 pass, 1 check failure, 2 config error, 3 solver
non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import platform
import sys
import time

import numpy as np
import scipy

from . import __version__, checks, io, presets
from .extension import dtn_calibration, dtn_flux, extend_poisson, PoissonKernel
from .fraclap import fraclap_pv, fraclap_spectral, pv_normalization_ratio, PVQuadratureConfig
from .geometry import geometry_of, vertical_excess
from .grids import (
    FractionalOrder,
    HalfSpaceGrid,
    OutOfDomainError,
    ScalarField,
    TraceField,
    default_grading,
)
from .potentials import make_potential
from .solver import (
    SolutionPair,
    SolveConfig,
    SolverConvergenceError,
    solve_coupled_system,
    solve_weighted_dirichlet,
)

SCHEMA_VERSION = 1

COMMANDS = (
    "fraclap",
    "extend",
    "solve",
    "geometry",
    "check-monotone",
    "check-stability",
    "poincare",
    "energy-sweep",
    "annulus",
    "symmetry",
    "decay",
    "pipeline-symmetry",
)


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


# -- configuration ----------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class RunConfig:
    command: str
    grid: dict
    orders: dict
    potential: dict
    solver: dict
    check: dict
    input: dict
    output_dir: str
    seed: int

    @staticmethod
    def from_dict(raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config document must be a JSON object")
        command = raw.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command: expected one of {COMMANDS}, got {command!r}")
        known = {"command", "grid", "orders", "potential", "solver", "check", "input",
                 "output_dir", "seed"}
        for key in raw:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed: expected a nonnegative integer, got {seed!r}")
        for block in ("grid", "orders", "potential", "solver", "check", "input"):
            if not isinstance(raw.get(block, {}), dict):
                raise ConfigError(f"{block}: expected an object")
        return RunConfig(
            command=command,
            grid=dict(raw.get("grid", {})),
            orders=dict(raw.get("orders", {})),
            potential=dict(raw.get("potential", {})),
            solver=dict(raw.get("solver", {})),
            check=dict(raw.get("check", {})),
            input=dict(raw.get("input", {})),
            output_dir=str(raw.get("output_dir", ".")),
            seed=seed,
        )

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _number(block: dict, blockname: str, key: str, lo, hi, default=None, integer=False):
    if key not in block:
        if default is None:
            raise ConfigError(f"{blockname}.{key}: required")
        return default
    v = block[key]
    if integer and not isinstance(v, int):
        raise ConfigError(f"{blockname}.{key}: expected an integer, got {v!r}")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{blockname}.{key}: expected a number, got {v!r}")
    if not lo <= v <= hi:
        raise ConfigError(f"{blockname}.{key}: expected value in [{lo}, {hi}], got {v}")
    return v


def build_orders(cfg: RunConfig):
    s1 = _number(cfg.orders, "orders", "s1", 1e-6, 1 - 1e-6)
    s2 = _number(cfg.orders, "orders", "s2", 1e-6, 1 - 1e-6, default=s1)
    return FractionalOrder(float(s1)), FractionalOrder(float(s2))


def build_grid(cfg: RunConfig) -> HalfSpaceGrid:
    g = cfg.grid
    n = _number(g, "grid", "n", 1, 2, integer=True)
    L = _number(g, "grid", "L", 1e-12, 1e12)
    nx = _number(g, "grid", "nx", 3, 1 << 16, integer=True)
    Y = _number(g, "grid", "Y", 1e-12, 1e12)
    ny = _number(g, "grid", "ny", 3, 1 << 16, integer=True)
    gamma = g.get("gamma")
    if gamma is None:
        try:
            o1, _ = build_orders(cfg)
            gamma = default_grading(o1.alpha)
        except ConfigError:
            gamma = 2.0
    gamma = float(gamma)
    if gamma < 1.0:
        raise ConfigError(f"grid.gamma: expected >= 1, got {gamma}")
    periodic = g.get("periodic", False)
    if not isinstance(periodic, bool):
        raise ConfigError(f"grid.periodic: expected true/false, got {periodic!r}")
    try:
        return HalfSpaceGrid(
            n=int(n), L=float(L), nx=int(nx), Y=float(Y), ny=int(ny),
            grading_gamma=gamma, periodic_x=periodic,
        )
    except ValueError as e:
        raise ConfigError(f"grid: {e}") from e


def build_potential(cfg: RunConfig):
    name = cfg.potential.get("name")
    if not name:
        raise ConfigError("potential.name: required for this command")
    try:
        return make_potential(name, **cfg.potential.get("params", {}))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"potential: {e}") from e


def build_solve_config(cfg: RunConfig) -> SolveConfig:
    s = cfg.solver
    try:
        return SolveConfig(
            linear_tol=float(_number(s, "solver", "linear_tol", 0, 1, default=1e-10)),
            max_cg_iter=int(_number(s, "solver", "max_cg_iter", 1, 10**6, default=100, integer=True)),
            damping=float(_number(s, "solver", "damping", 1e-9, 1.0, default=0.7)),
            picard_tol=float(_number(s, "solver", "picard_tol", 0, 1, default=1e-6)),
            max_picard_iter=int(
                _number(s, "solver", "max_picard_iter", 1, 10**6, default=400, integer=True)
            ),
        )
    except ValueError as e:
        raise ConfigError(f"solver: {e}") from e


# -- synthetic inputs -------------------------------------------------------


def _mode_trace(grid: HalfSpaceGrid, modes, amplitudes) -> TraceField:
    xs = grid.x_mesh()
    vals = np.zeros(grid.x_shape)
    for m, a in zip(modes, amplitudes):
        vals += a * np.cos(np.pi * m * (xs[0] + grid.L) / grid.L)
    return TraceField(grid, vals)


def _layer_direction(grid: HalfSpaceGrid, angle_deg: float) -> np.ndarray:
    if grid.n == 1:
        return np.array([1.0])
    a = np.radians(angle_deg)
    return np.array([np.sin(a), np.cos(a)])  # angle 0 = last axis


def _layer_coordinate(grid: HalfSpaceGrid, angle_deg: float) -> np.ndarray:
    om = _layer_direction(grid, angle_deg)
    xs = grid.x_mesh()
    return sum(om[i] * xs[i] for i in range(grid.n))


def build_input_field(cfg: RunConfig, grid: HalfSpaceGrid, rng: np.random.Generator) -> ScalarField:
    kind = cfg.input.get("kind", "file")
    if kind == "file":
        path = cfg.input.get("path")
        if not path or not os.path.exists(path):
            raise ConfigError(f"input.path: file not found: {path!r}")
        f = io.read_field(path)
        if f.grid != grid:
            raise ConfigError("input field grid differs from the configured grid")
        return f
    if kind == "plane":
        xs = grid.x_mesh()
        return ScalarField(grid, np.broadcast_to(xs[0][..., None], grid.shape).copy())
    if kind == "radial-squared":
        xs = grid.x_mesh()
        r2 = sum(c[..., None] ** 2 for c in xs)
        return ScalarField(grid, np.broadcast_to(r2, grid.shape).copy())
    if kind == "tilted-layer":
        angle = float(cfg.input.get("angle_deg", 0.0))
        t = _layer_coordinate(grid, angle)[..., None]
        return ScalarField(grid, np.tanh(t) * np.exp(-grid.y))
    if kind == "random-band":
        return random_band_field(grid, rng, n_modes=int(cfg.input.get("n_modes", 4)))
    raise ConfigError(f"input.kind: unknown kind {kind!r}")


def random_band_field(grid: HalfSpaceGrid, rng: np.random.Generator, n_modes: int = 4) -> ScalarField:
    """Seeded band-limited field: a few harmonic modes with the matching
    exponential decay in y (so y-derivatives are consistent with a lift)."""
    xs = grid.x_mesh()
    vals = np.zeros(grid.shape)
    for a in range(n_modes):
        for b in range(n_modes if grid.n == 2 else 1):
            k1 = np.pi * a / grid.L
            k2 = np.pi * b / grid.L if grid.n == 2 else 0.0
            kmag = np.hypot(k1, k2)
            ph = k1 * xs[0] + (k2 * xs[1] if grid.n == 2 else 0.0)
            c, d = rng.standard_normal(2)
            vals += (c * np.cos(ph) + d * np.sin(ph))[..., None] * np.exp(-kmag * grid.y)
    return ScalarField(grid, vals)


def build_initial_traces(cfg: RunConfig, grid: HalfSpaceGrid):
    preset = cfg.solver.get("init", "layer")
    if preset == "zero":
        z = np.zeros(grid.x_shape)
        return TraceField(grid, z), TraceField(grid, z.copy())
    if preset == "layer":
        angle = float(cfg.solver.get("init_angle_deg", 0.0))
        t = _layer_coordinate(grid, angle)
        return TraceField(grid, np.tanh(t)), TraceField(grid, -np.tanh(t))
    if preset == "file":
        files = cfg.solver.get("init_files", {})
        for key in ("u", "v"):
            if key not in files:
                raise ConfigError(f"solver.init_files.{key}: required with init = 'file'")
        u = io.read_field(files["u"]).trace()
        v = io.read_field(files["v"]).trace()
        if u.grid != grid:
            raise ConfigError("solver.init_files: grid differs from the configured grid")
        return u, v
    raise ConfigError(f"solver.init: expected zero|layer|file, got {preset!r}")


def obtain_pair(cfg: RunConfig, grid: HalfSpaceGrid, timings: dict) -> SolutionPair:
    """Either load a stored (U, V) container pair or solve the coupled
    system from the configured potential and initial data."""
    F = build_potential(cfg)
    o1, o2 = build_orders(cfg)
    synth = cfg.input.get("synthetic_pair")
    if synth:
        if synth.get("kind", "layer") != "layer":
            raise ConfigError(f"input.synthetic_pair.kind: unknown kind {synth.get('kind')!r}")
        angle = float(synth.get("angle_deg", 0.0))
        t = _layer_coordinate(grid, angle)[..., None]
        decay = np.exp(-grid.y / (1.0 + grid.y))
        U = ScalarField(grid, np.tanh(t) * decay)
        V = ScalarField(grid, -np.tanh(t) * decay)
        return SolutionPair(U=U, V=V, order1=o1, order2=o2, potential=F)
    pair_files = cfg.input.get("pair")
    if pair_files:
        for key in ("u", "v"):
            if key not in pair_files:
                raise ConfigError(f"input.pair.{key}: required")
        U = io.read_field(pair_files["u"])
        V = io.read_field(pair_files["v"])
        if U.grid != grid or V.grid != grid:
            raise ConfigError("input.pair: container grids differ from the configured grid")
        return SolutionPair(U=U, V=V, order1=o1, order2=o2, potential=F)
    u0, v0 = build_initial_traces(cfg, grid)
    t0 = time.perf_counter()
    pair = solve_coupled_system(F, o1, o2, u0, v0, build_solve_config(cfg))
    timings["solve"] = time.perf_counter() - t0
    return pair


# -- report helpers ---------------------------------------------------------


def _versions() -> dict:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "fraclab": __version__,
    }


def _inequality_dict(rep: checks.InequalityReport) -> dict:
    d = dataclasses.asdict(rep)
    d["lhs_total"] = rep.lhs_total
    return d


def _tolerances(cfg: RunConfig):
    tol_coeff = float(_number(cfg.check, "check", "tol_coeff", 0, 100,
                              default=checks.DEFAULT_TOL_COEFF))
    eps_grad = cfg.check.get("eps_grad")
    if eps_grad is not None:
        eps_grad = float(eps_grad)
        if eps_grad <= 0:
            raise ConfigError(f"check.eps_grad: expected > 0, got {eps_grad}")
    return tol_coeff, eps_grad


def _radii(cfg: RunConfig, default=None) -> list:
    radii = cfg.check.get("radii", default)
    if not radii or not all(isinstance(r, (int, float)) and r > 0 for r in radii):
        raise ConfigError("check.radii: required list of positive numbers")
    return [float(r) for r in radii]


# -- commands ---------------------------------------------------------------


def cmd_fraclap(cfg, grid, outdir, rng, timings):
    if grid.n != 1 or not grid.periodic_x:
        raise ConfigError("fraclap command needs grid.n = 1 and grid.periodic = true")
    o1, _ = build_orders(cfg)
    if cfg.input.get("kind", "mode") == "file":
        trace = io.trace_from_csv(cfg.input["path"], grid)
    else:
        modes = cfg.input.get("modes", [1])
        amps = cfg.input.get("amplitudes", [1.0] * len(modes))
        trace = _mode_trace(grid, modes, amps)
    qcfg = PVQuadratureConfig()
    out = fraclap_pv(trace, o1, qcfg)
    ratio = pv_normalization_ratio(o1, grid)
    io.trace_to_csv(os.path.join(outdir, "fraclap.csv"), out)
    meta = {
        "s": o1.s,
        "delta": qcfg.inner_radius_cells * grid.dx,
        "ratio": ratio.ratio,
        "dispersion": ratio.dispersion,
        "per_mode": list(ratio.per_mode),
    }
    io.atomic_write_text(os.path.join(outdir, "fraclap_meta.json"), io.canonical_json(meta) + "\n")
    max_disp = float(cfg.check.get("max_dispersion", 0.1))
    return {"metadata": meta}, [
        {"name": "pv_mode_dispersion", "value": ratio.dispersion,
         "tol": max_disp, "satisfied": ratio.dispersion < max_disp}
    ]


def cmd_extend(cfg, grid, outdir, rng, timings):
    o1, _ = build_orders(cfg)
    if cfg.input.get("kind", "mode") == "file":
        trace = io.trace_from_csv(cfg.input["path"], grid)
    else:
        modes = cfg.input.get("modes", [1])
        amps = cfg.input.get("amplitudes", [1.0] * len(modes))
        trace = _mode_trace(grid, modes, amps)

    t0 = time.perf_counter()
    U = extend_poisson(trace, o1)
    timings["extend"] = time.perf_counter() - t0
    dtn = dtn_flux(U, o1)
    kappa = dtn_calibration(o1, grid)
    io.write_field(os.path.join(outdir, "extension.frlb"), U)
    io.trace_to_csv(os.path.join(outdir, "dtn.csv"), dtn.flux)
    calib = {"s": o1.s, "alpha": o1.alpha, "kappa": kappa, "fit_residual": dtn.fit_residual}
    io.atomic_write_text(os.path.join(outdir, "calibration.json"), io.canonical_json(calib) + "\n")
    results = {"calibration": calib}
    check_list = [
        {"name": "dtn_fit_residual", "value": dtn.fit_residual, "tol": 0.25,
         "satisfied": dtn.fit_residual < 0.25}
    ]

    heights = cfg.check.get("kernel_mass_heights")
    if heights:
        kernel = PoissonKernel(o1, grid.n)
        masses = {str(y): kernel.slice_mass(float(y)) for y in heights}
        results["kernel_masses"] = masses
        worst = max(abs(m - 1.0) for m in masses.values())
        check_list.append(
            {"name": "kernel_unit_mass", "value": worst, "tol": 1e-6, "satisfied": worst < 1e-6}
        )

    if grid.periodic_x and cfg.check.get("spectral_compare", True):
        ref = fraclap_spectral(trace, o1).values
        err = np.linalg.norm(dtn.flux.values / kappa - ref) / max(np.linalg.norm(ref), 1e-300)
        results["spectral_rel_l2_error"] = float(err)
        max_err = float(cfg.check.get("max_rel_error", 0.05))
        check_list.append(
            {"name": "dtn_vs_spectral", "value": float(err), "tol": max_err,
             "satisfied": err < max_err}
        )

    if cfg.check.get("cross_validate", False):
        sol = solve_weighted_dirichlet(trace, o1, build_solve_config(cfg))
        diff = np.linalg.norm(U.values - sol.values) / max(np.linalg.norm(sol.values), 1e-300)
        results["solver_rel_l2_difference"] = float(diff)
        max_diff = float(cfg.check.get("max_cross_error", 0.01))
        check_list.append(
            {"name": "kernel_vs_solver", "value": float(diff), "tol": max_diff,
             "satisfied": diff < max_diff}
        )
    return results, check_list


def cmd_solve(cfg, grid, outdir, rng, timings):
    pair = obtain_pair(cfg, grid, timings)
    io.write_field(os.path.join(outdir, "U.frlb"), pair.U)
    io.write_field(os.path.join(outdir, "V.frlb"), pair.V)
    io.rows_to_csv(
        os.path.join(outdir, "residual_history.csv"),
        ["iteration", "residual"],
        [(i, float(r)) for i, r in enumerate(pair.residual_history)],
    )
    results = {
        "iterations": pair.iterations,
        "converged": pair.converged,
        "damping_used": pair.damping_used,
        "final_residual": float(pair.residual_history[-1]) if pair.residual_history else None,
    }
    return results, [{"name": "solver_converged", "value": results["final_residual"],
                      "tol": build_solve_config(cfg).picard_tol, "satisfied": pair.converged}]


def _geometry_level_rows(field: ScalarField, eps_grad):
    grid = field.grid
    geo = geometry_of(field, eps_grad)
    rows = []
    area = grid.dx**grid.n
    axes = tuple(range(grid.n))
    maskfrac = np.mean(geo.nondegenerate_mask, axis=axes)
    curv = np.sum(geo.curvature_sq_energy, axis=axes) * area
    tang = np.sum(geo.tangential_sq, axis=axes) * area
    for j in range(grid.ny + 1):
        rows.append((j, float(grid.y[j]), float(maskfrac[j]), float(curv[j]), float(tang[j])))
    return geo, rows


def cmd_geometry(cfg, grid, outdir, rng, timings):
    field = build_input_field(cfg, grid, rng)
    _, eps_grad = _tolerances(cfg)
    geo, rows = _geometry_level_rows(field, eps_grad)
    io.rows_to_csv(
        os.path.join(outdir, "geometry.csv"),
        ["level", "y", "mask_fraction", "curvature_energy", "tangential_energy"],
        rows,
    )
    m = geo.interior_mask
    s1s2 = geo.curvature_sq_energy + geo.tangential_sq
    denom = float(np.sum(s1s2[m]))
    rel_residual = float(np.sum(geo.identity_residual[m]) / denom) if denom > 0 else 0.0
    results = {
        "eps_grad": geo.eps_grad,
        "mask_fraction": float(np.mean(geo.nondegenerate_mask)),
        "identity_rel_residual": rel_residual,
    }
    check_list = []
    max_res = cfg.check.get("max_identity_residual")
    if max_res is not None:
        check_list.append({"name": "geometry_identity", "value": rel_residual,
                           "tol": float(max_res), "satisfied": rel_residual < float(max_res)})

    sweep = cfg.check.get("vertical_excess_sweep")
    if sweep:
        worst = np.inf
        for _ in range(int(sweep)):
            f = random_band_field(grid, rng)
            ve = vertical_excess(f)
            scale = float(np.max(np.abs(f.values))) ** 2
            worst = min(worst, float(np.min(ve)) / max(scale, 1e-300))
        tol = checks.slack_tolerance(grid, 1.0, _tolerances(cfg)[0])
        results["vertical_excess_worst"] = worst
        check_list.append({"name": "vertical_excess_nonneg", "value": worst,
                           "tol": tol, "satisfied": worst >= -tol})
    return results, check_list


def cmd_check_monotone(cfg, grid, outdir, rng, timings):
    pair = obtain_pair(cfg, grid, timings)
    mono = checks.monotonicity_check(pair)
    results = dataclasses.asdict(mono)
    return results, [{"name": "monotone_pair", "value": mono.margin, "tol": 0.0,
                      "satisfied": mono.monotone}]


def cmd_check_stability(cfg, grid, outdir, rng, timings):
    pair = obtain_pair(cfg, grid, timings)
    R = _radii(cfg, default=[min(grid.L, grid.Y) / 2.0])[0]
    size = int(_number(cfg.check, "check", "basis_size", 1, 1000, default=20, integer=True))
    tol_coeff, _ = _tolerances(cfg)
    basis = checks.canonical_test_basis(pair, R, size=size)
    forms = [checks.stability_form(pair, t) for t in basis]
    lam, _coef = checks.stability_min(pair, basis)
    io.rows_to_csv(
        os.path.join(outdir, "stability_forms.csv"),
        ["index", "form"],
        [(i, float(v)) for i, v in enumerate(forms)],
    )
    scale = float(np.mean(np.abs(forms))) + abs(lam)
    tol = checks.slack_tolerance(grid, scale, tol_coeff)
    results = {"radius": R, "basis_size": len(basis), "forms": [float(v) for v in forms],
               "stability_min": lam, "tol": tol}
    return results, [
        {"name": "stability_forms_nonneg", "value": float(np.min(forms)), "tol": tol,
         "satisfied": float(np.min(forms)) >= -tol},
        {"name": "stability_min_nonneg", "value": lam, "tol": tol, "satisfied": lam >= -tol},
    ]


def _poincare_reports(cfg, grid, pair, timings):
    tol_coeff, eps_grad = _tolerances(cfg)
    radii = _radii(cfg)
    variant = cfg.check.get("variant", "auto")
    if variant not in ("auto", "monotone", "stable"):
        raise ConfigError(f"check.variant: expected auto|monotone|stable, got {variant!r}")
    if variant == "auto":
        variant = "monotone" if checks.monotonicity_check(pair).monotone else "stable"
    evidence = None
    if variant == "stable":
        size = int(_number(cfg.check, "check", "basis_size", 1, 1000, default=20, integer=True))
        t0 = time.perf_counter()
        basis = checks.canonical_test_basis(pair, min(radii), size=size)
        evidence, _ = checks.stability_min(pair, basis)
        timings["stability_evidence"] = time.perf_counter() - t0
    reports = []
    for R in radii:
        phi = checks.log_cutoff(R, grid)
        if variant == "monotone":
            rep = checks.poincare_monotone(pair, phi, eps_grad, tol_coeff)
        else:
            rep = checks.poincare_stable(pair, phi, evidence, eps_grad, tol_coeff)
        reports.append((R, rep))
    return variant, evidence, reports


def cmd_poincare(cfg, grid, outdir, rng, timings):
    pair = obtain_pair(cfg, grid, timings)
    variant, evidence, reports = _poincare_reports(cfg, grid, pair, timings)
    io.rows_to_csv(
        os.path.join(outdir, "poincare.csv"),
        ["R", "lhs_curv_U", "lhs_tan_U", "lhs_curv_V", "lhs_tan_V",
         "rhs_gradient", "coupling", "slack", "tol"],
        [(R, rep.lhs_curvature_U, rep.lhs_tangential_U, rep.lhs_curvature_V,
          rep.lhs_tangential_V, rep.rhs_gradient, rep.coupling_term, rep.slack, rep.tol)
         for R, rep in reports],
    )
    results = {
        "variant": variant,
        "stability_evidence": evidence,
        "reports": {str(R): _inequality_dict(rep) for R, rep in reports},
    }
    return results, [
        {"name": f"poincare_{variant}_R{R:g}", "value": rep.slack, "tol": rep.tol,
         "satisfied": rep.satisfied}
        for R, rep in reports
    ]


def cmd_energy_sweep(cfg, grid, outdir, rng, timings):
    pair = obtain_pair(cfg, grid, timings)
    table = checks.energy_growth_sweep(pair, _radii(cfg))
    io.rows_to_csv(
        os.path.join(outdir, "energy_sweep.csv"),
        ["R", "energy_U", "energy_V"],
        list(zip([float(r) for r in table.radii],
                 [float(e) for e in table.energy_U],
                 [float(e) for e in table.energy_V])),
    )
    results = {
        "radii": list(table.radii),
        "energy_U": list(table.energy_U),
        "energy_V": list(table.energy_V),
        "slope_U": table.slope_U,
        "slope_V": table.slope_V,
    }
    check_list = []
    max_slope = cfg.check.get("max_slope")
    if max_slope is not None:
        worst = max(table.slope_U, table.slope_V)
        check_list.append({"name": "energy_growth_slope", "value": worst,
                           "tol": float(max_slope), "satisfied": worst <= float(max_slope)})
    return results, check_list


def cmd_annulus(cfg, grid, outdir, rng, timings):
    kinds = cfg.input.get("kinds", ["ones"])
    count = int(_number(cfg.check, "check", "count", 1, 10**4, default=5, integer=True))
    radii = _radii(cfg, default=[4.0, 9.0, 16.0])
    rows = []
    check_list = []
    for kind in kinds:
        if kind == "ones":
            fields = [("ones", ScalarField(grid, np.ones(grid.shape)))]
        elif kind == "gaussian":
            d2 = sum(c[..., None] ** 2 for c in grid.x_mesh()) + grid.y**2
            fields = [("gaussian", ScalarField(grid, np.exp(-d2 / 2.0)))]
        elif kind == "random":
            fields = [
                (f"random{i}", ScalarField(grid, random_band_field(grid, rng).values ** 2))
                for i in range(count)
            ]
        elif kind == "file":
            fields = [("file", build_input_field(cfg, grid, rng))]
        else:
            raise ConfigError(f"input.kinds: unknown density kind {kind!r}")
        for label, h in fields:
            for R in radii:
                rep = checks.annulus_lemma_check(h, R)
                rows.append((label, R, rep.lhs, rep.rhs, rep.slack))
                check_list.append(
                    {"name": f"annulus_{label}_R{R:g}", "value": rep.slack, "tol": 0.0,
                     "satisfied": rep.satisfied and rep.slack > 0.0}
                )
    io.rows_to_csv(os.path.join(outdir, "annulus.csv"),
                   ["density", "R", "lhs", "rhs", "slack"], rows)
    return {"rows": [list(r) for r in rows]}, check_list


def _symmetry_results(cfg, pair):
    tu, tv = pair.traces()
    ru = checks.extract_direction(tu)
    rv = checks.extract_direction(tv)
    threshold = float(cfg.check.get("threshold", 0.05))
    try:
        angle = checks.alignment_check(ru, rv, threshold)
    except checks.HypothesisError:
        angle = None
    return ru, rv, angle, threshold


def cmd_symmetry(cfg, grid, outdir, rng, timings):
    if grid.n != 2:
        raise ConfigError("symmetry command needs grid.n = 2")
    pair = obtain_pair(cfg, grid, timings)
    ru, rv, angle, threshold = _symmetry_results(cfg, pair)
    for tag, r in (("u", ru), ("v", rv)):
        io.rows_to_csv(
            os.path.join(outdir, f"profile_{tag}.csv"),
            ["t", "value"],
            list(zip([float(t) for t in r.profile_t], [float(v) for v in r.profile_values])),
        )
    results = {
        "omega_u": [float(v) for v in ru.omega],
        "omega_v": [float(v) for v in rv.omega],
        "fit_residual_u": ru.fit_residual, "fit_residual_v": rv.fit_residual,
        "alignment_angle_deg": angle, "threshold": threshold,
    }
    check_list = [
        {"name": "symmetry_misfit_u", "value": ru.fit_residual, "tol": threshold,
         "satisfied": ru.fit_residual < threshold},
        {"name": "symmetry_misfit_v", "value": rv.fit_residual, "tol": threshold,
         "satisfied": rv.fit_residual < threshold},
    ]
    max_angle = cfg.check.get("max_angle_deg")
    if max_angle is not None:
        ok = angle is not None and angle < float(max_angle)
        check_list.append({"name": "alignment_angle", "value": angle,
                           "tol": float(max_angle), "satisfied": ok})
    return results, check_list


def _decay_results(cfg, grid, pair, timings, evidence=None):
    _, eps_grad = _tolerances(cfg)
    radii = _radii(cfg)
    if evidence is None and cfg.check.get("stability_evidence", False):
        size = int(_number(cfg.check, "check", "basis_size", 1, 1000, default=20, integer=True))
        t0 = time.perf_counter()
        basis = checks.canonical_test_basis(pair, min(min(radii), min(grid.L, grid.Y)), size=size)
        evidence, _ = checks.stability_min(pair, basis)
        timings["stability_evidence"] = time.perf_counter() - t0
    table = checks.symmetry_decay_experiment(pair, radii, evidence, eps_grad)
    return table, evidence


def cmd_decay(cfg, grid, outdir, rng, timings):
    pair = obtain_pair(cfg, grid, timings)
    table, evidence = _decay_results(cfg, grid, pair, timings)
    io.rows_to_csv(
        os.path.join(outdir, "decay.csv"),
        ["R", "lhs_inner", "rhs_exact", "rhs_annulus_bound"],
        [(r.R, r.lhs_inner, r.rhs_exact, r.rhs_annulus_bound) for r in table.rows],
    )
    results = {
        "rows": [dataclasses.asdict(r) for r in table.rows],
        "fitted_constant": table.fitted_constant,
        "hypotheses": table.hypotheses,
        "stability_evidence": evidence,
    }
    return results, []


def cmd_pipeline_symmetry(cfg, grid, outdir, rng, timings):
    if grid.n != 2:
        raise ConfigError("pipeline-symmetry needs grid.n = 2")
    pair = obtain_pair(cfg, grid, timings)
    io.write_field(os.path.join(outdir, "U.frlb"), pair.U)
    io.write_field(os.path.join(outdir, "V.frlb"), pair.V)

    results = {}
    check_list = []

    t0 = time.perf_counter()
    _, eps_grad = _tolerances(cfg)
    geoU, rows = _geometry_level_rows(pair.U, eps_grad)
    io.rows_to_csv(
        os.path.join(outdir, "geometry.csv"),
        ["level", "y", "mask_fraction", "curvature_energy", "tangential_energy"],
        rows,
    )
    timings["geometry"] = time.perf_counter() - t0

    mono = checks.monotonicity_check(pair)
    results["monotonicity"] = dataclasses.asdict(mono)

    t0 = time.perf_counter()
    variant, evidence, reports = _poincare_reports(cfg, grid, pair, timings)
    timings["poincare"] = time.perf_counter() - t0
    results["poincare"] = {
        "variant": variant,
        "stability_evidence": evidence,
        "reports": {str(R): _inequality_dict(rep) for R, rep in reports},
    }
    check_list += [
        {"name": f"poincare_{variant}_R{R:g}", "value": rep.slack, "tol": rep.tol,
         "satisfied": rep.satisfied}
        for R, rep in reports
    ]

    t0 = time.perf_counter()
    try:
        table, _ = _decay_results(cfg, grid, pair, timings, evidence=evidence)
    except checks.HypothesisError as e:
        results["decay"] = {"skipped": str(e)}
    else:
        io.rows_to_csv(
            os.path.join(outdir, "decay.csv"),
            ["R", "lhs_inner", "rhs_exact", "rhs_annulus_bound"],
            [(r.R, r.lhs_inner, r.rhs_exact, r.rhs_annulus_bound) for r in table.rows],
        )
        results["decay"] = {
            "rows": [dataclasses.asdict(r) for r in table.rows],
            "fitted_constant": table.fitted_constant,
            "hypotheses": table.hypotheses,
        }
    timings["decay"] = time.perf_counter() - t0

    ru, rv, angle, threshold = _symmetry_results(cfg, pair)
    results["symmetry"] = {
        "omega_u": [float(v) for v in ru.omega],
        "omega_v": [float(v) for v in rv.omega],
        "fit_residual_u": ru.fit_residual, "fit_residual_v": rv.fit_residual,
        "alignment_angle_deg": angle, "threshold": threshold,
    }
    check_list.append({"name": "symmetry_misfit_u", "value": ru.fit_residual,
                       "tol": threshold, "satisfied": ru.fit_residual < threshold})
    check_list.append({"name": "symmetry_misfit_v", "value": rv.fit_residual,
                       "tol": threshold, "satisfied": rv.fit_residual < threshold})
    max_angle = float(cfg.check.get("max_angle_deg", 2.0))
    ok = angle is not None and angle < max_angle
    check_list.append({"name": "alignment_angle", "value": angle, "tol": max_angle,
                       "satisfied": ok})
    return results, check_list


_COMMAND_IMPLS = {
    "fraclap": cmd_fraclap,
    "extend": cmd_extend,
    "solve": cmd_solve,
    "geometry": cmd_geometry,
    "check-monotone": cmd_check_monotone,
    "check-stability": cmd_check_stability,
    "poincare": cmd_poincare,
    "energy-sweep": cmd_energy_sweep,
    "annulus": cmd_annulus,
    "symmetry": cmd_symmetry,
    "decay": cmd_decay,
    "pipeline-symmetry": cmd_pipeline_symmetry,
}


# -- orchestration ----------------------------------------------------------


def run(config: RunConfig, out_dir: str | None = None, quiet: bool = False) -> dict:
    """Execute one configured command and write its artifacts and report.

    Returns the report dictionary (with ``report_hash`` filled in); the
    ``passed`` field aggregates all checks the command performed.
    """
    outdir = out_dir or config.output_dir
    os.makedirs(outdir, exist_ok=True)
    rng = np.random.default_rng(config.seed)
    grid = build_grid(config)
    timings: dict = {}
    t_start = time.perf_counter()
    results, check_list = _COMMAND_IMPLS[config.command](config, grid, outdir, rng, timings)
    timings["total"] = time.perf_counter() - t_start
    passed = all(c["satisfied"] for c in check_list)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": config.command,
        "config": config.as_dict(),
        "versions": _versions(),
        "timings": timings,
        "results": results,
        "checks": check_list,
        "passed": passed,
    }
    h = io.write_report(os.path.join(outdir, "report.json"), report)
    report["report_hash"] = h
    if not quiet:
        status = "PASS" if passed else "FAIL"
        print(f"{config.command}: {status} ({len(check_list)} checks, hash {h[:12]})")
        for c in check_list:
            mark = "ok " if c["satisfied"] else "BAD"
            print(f"  [{mark}] {c['name']}: value={c['value']} tol={c['tol']}")
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fraclab",
        description="Weighted half-space extensions and level-set energy checks",
    )
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="path to a JSON run configuration")
    group.add_argument("--preset", help="name of a built-in run preset")
    group.add_argument("--list-presets", action="store_true", help="list preset names and exit")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, help="seed override for randomized sweeps")
    parser.add_argument("--quiet", action="store_true", help="suppress the console summary")
    args = parser.parse_args(argv)

    if args.list_presets:
        for name in presets.PRESETS:
            print(name)
        return 0

    try:
        if args.preset:
            try:
                raw = presets.get(args.preset)
            except KeyError as e:
                raise ConfigError(str(e)) from e
        else:
            try:
                with open(args.config) as fh:
                    raw = json.load(fh)
            except OSError as e:
                raise ConfigError(f"config file: {e}") from e
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file is not valid JSON: {e}") from e
        if args.seed is not None:
            raw = {**raw, "seed": args.seed}
        config = RunConfig.from_dict(raw)
        report = run(config, out_dir=args.out, quiet=args.quiet)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OutOfDomainError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except SolverConvergenceError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        # stage preconditions (grid resolution, degenerate data) are
        # configuration problems, not check failures
        print(f"config error: {e}", file=sys.stderr)
        return 2
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
