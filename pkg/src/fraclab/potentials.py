"""Coupling potentials F(t, sigma) with declared second derivatives.

A potential supplies its first partials everywhere and its second partials
on a declared set D (the complement N, where some second derivative fails
to exist, is a user-declared predicate: almost-everywhere differentiability
is not machine-detectable).  Consumers restrict boundary integrals of the
second derivatives to the discrete set D_uv = {x : (u(x), v(x)) in D}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grids import HalfSpaceGrid, TraceField

MASKED = np.nan  # sentinel carried by second-derivative fields off D


@dataclass(frozen=True)
class CoupledPotential:
    name: str
    value: Callable
    d1: Callable
    d2: Callable
    d11: Callable
    d12: Callable  # single mixed partial, used for both F_12 and F_21
    d22: Callable
    is_in_D: Callable = field(default=lambda t, s: np.ones(np.broadcast(t, s).shape, dtype=bool))
    lipschitz_bound_hint: Optional[float] = None


@dataclass(frozen=True)
class NondiffMask:
    """Boolean trace-plane field marking N_uv; True where second
    derivatives of F do not exist at (u(x), v(x))."""

    grid: HalfSpaceGrid
    values: np.ndarray


@dataclass(frozen=True)
class DerivativeFields:
    f1: TraceField
    f2: TraceField
    f11: TraceField
    f22: TraceField
    f12: TraceField
    mask: NondiffMask


def eval_derivatives(
    F: CoupledPotential, trace_u: TraceField, trace_v: TraceField
) -> DerivativeFields:
    """Evaluate F's derivative fields on the trace plane.

    Second-derivative fields carry NaN at masked points; every consumer
    must skip masked points.
    """
    grid = trace_u.grid
    u = trace_u.values
    v = trace_v.values
    first = {}
    for label, fn in (("F1", F.d1), ("F2", F.d2), ("F", F.value)):
        out = np.asarray(fn(u, v), dtype=float)
        out = np.broadcast_to(out, u.shape).copy()
        if not np.all(np.isfinite(out)):
            bad = np.argwhere(~np.isfinite(out))[0]
            raise ValueError(
                f"potential {F.name}: non-finite {label} at grid point {tuple(bad)} "
                f"(u={u[tuple(bad)]:.6g}, v={v[tuple(bad)]:.6g})"
            )
        first[label] = out
    in_D = np.asarray(F.is_in_D(u, v), dtype=bool)
    in_D = np.broadcast_to(in_D, u.shape).copy()
    mask = NondiffMask(grid, ~in_D)

    def second(fn):
        out = np.full(u.shape, MASKED)
        if np.any(in_D):
            vals = np.asarray(fn(u[in_D], v[in_D]), dtype=float)
            vals = np.broadcast_to(vals, u[in_D].shape)
            out[in_D] = vals
        return out

    def tf(a):
        # traces tolerate NaN sentinels only through this private path
        obj = TraceField.__new__(TraceField)
        object.__setattr__(obj, "grid", grid)
        object.__setattr__(obj, "values", a)
        return obj

    return DerivativeFields(
        f1=TraceField(grid, first["F1"]),
        f2=TraceField(grid, first["F2"]),
        f11=tf(second(F.d11)),
        f22=tf(second(F.d22)),
        f12=tf(second(F.d12)),
        mask=mask,
    )


def sign_condition(f12: TraceField, mask: NondiffMask, mode: str):
    """Strict sign test of F_12 on unmasked points.

    Returns (holds, violation_count).  Signs are exact data: no tolerance.
    """
    if mode not in ("nonneg", "nonpos"):
        raise ValueError("mode must be 'nonneg' or 'nonpos'")
    vals = f12.values[~mask.values]
    if mode == "nonneg":
        bad = vals < 0.0
    else:
        bad = vals > 0.0
    return not np.any(bad), int(np.count_nonzero(bad))


# -- built-in potentials ---------------------------------------------------


def product_coupling() -> CoupledPotential:
    """F(t, s) = t*s."""
    z = np.zeros_like
    return CoupledPotential(
        name="product",
        value=lambda t, s: t * s,
        d1=lambda t, s: s + z(t),
        d2=lambda t, s: t + z(s),
        d11=lambda t, s: z(t),
        d12=lambda t, s: np.ones_like(t * s),
        d22=lambda t, s: z(s),
    )


def phase_separation() -> CoupledPotential:
    """The phase-separation potential F(t, s) = -t^2 s^2."""
    return CoupledPotential(
        name="phase_separation",
        value=lambda t, s: -(t**2) * s**2,
        d1=lambda t, s: -2.0 * t * s**2,
        d2=lambda t, s: -2.0 * t**2 * s,
        d11=lambda t, s: -2.0 * s**2,
        d12=lambda t, s: -4.0 * t * s,
        d22=lambda t, s: -2.0 * t**2,
    )


def double_well(scale: float = 1.0) -> CoupledPotential:
    """Uncoupled double wells, oriented so the heteroclinic layer solves
    the boundary equation: F = -scale*[(1-t^2)^2 + (1-s^2)^2]/4, hence
    F_1 = scale*(t - t^3) and F_12 = 0."""
    a = float(scale)
    return CoupledPotential(
        name="double_well",
        value=lambda t, s: -a * ((1 - t**2) ** 2 + (1 - s**2) ** 2) / 4.0,
        d1=lambda t, s: a * (t - t**3),
        d2=lambda t, s: a * (s - s**3),
        d11=lambda t, s: a * (1.0 - 3.0 * t**2),
        d12=lambda t, s: np.zeros_like(t * s),
        d22=lambda t, s: a * (1.0 - 3.0 * s**2),
        lipschitz_bound_hint=4.0 * a,
    )


def coupled_double_well(beta: float, scale: float = 1.0) -> CoupledPotential:
    """Double wells plus product coupling beta*t*s; F_12 = beta everywhere,
    so beta > 0 realizes the positive-F_12 rectangle hypothesis."""
    a, b = float(scale), float(beta)
    return CoupledPotential(
        name="coupled_double_well",
        value=lambda t, s: -a * ((1 - t**2) ** 2 + (1 - s**2) ** 2) / 4.0 + b * t * s,
        d1=lambda t, s: a * (t - t**3) + b * s,
        d2=lambda t, s: a * (s - s**3) + b * t,
        d11=lambda t, s: a * (1.0 - 3.0 * t**2),
        d12=lambda t, s: np.full(np.broadcast(t, s).shape, b),
        d22=lambda t, s: a * (1.0 - 3.0 * s**2),
        lipschitz_bound_hint=4.0 * a + abs(b),
    )


def cubic_abs_well() -> CoupledPotential:
    """C^{1,1} but not C^2 in a classical sense: F = |t|^3/6 + s^2/2.

    F_11 = |t| is in fact defined everywhere, so D is all of R^2 and the
    mask is empty; the example exercises the declaration machinery."""
    return CoupledPotential(
        name="cubic_abs_well",
        value=lambda t, s: np.abs(t) ** 3 / 6.0 + s**2 / 2.0,
        d1=lambda t, s: np.sign(t) * t**2 / 2.0,
        d2=lambda t, s: s + np.zeros_like(t),
        d11=lambda t, s: np.abs(t),
        d12=lambda t, s: np.zeros_like(t * s),
        d22=lambda t, s: np.ones_like(t * s),
    )


BUILTINS = {
    "product": product_coupling,
    "phase_separation": phase_separation,
    "double_well": double_well,
    "coupled_double_well": coupled_double_well,
    "cubic_abs_well": cubic_abs_well,
}


def make_potential(name: str, **params) -> CoupledPotential:
    if name not in BUILTINS:
        raise ValueError(f"unknown potential {name!r}; available: {sorted(BUILTINS)}")
    return BUILTINS[name](**params)
