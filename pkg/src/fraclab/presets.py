"""Built-in run presets: one ready-to-run configuration per property the
artifact demonstrates.  ``fraclab --preset NAME`` runs one; the test suite
runs them all and re-runs them to confirm deterministic report hashes."""

from __future__ import annotations

import copy

PRESETS: dict = {
    # raw principal-value integral vs the spectral multiplier on one mode
    "fraclap-ratio": {
        "command": "fraclap",
        "grid": {"n": 1, "L": 4.0, "nx": 256, "Y": 4.0, "ny": 16, "periodic": True},
        "orders": {"s1": 0.5},
        "input": {"kind": "mode", "modes": [1]},
        "check": {"max_dispersion": 0.1},
        "seed": 0,
    },
    # calibrated DtN flux of the kernel lift vs the spectral multiplier
    "op-equivalence": {
        "command": "extend",
        "grid": {"n": 1, "L": 8.0, "nx": 512, "Y": 20.0, "ny": 200, "periodic": True},
        "orders": {"s1": 0.75},
        "input": {"kind": "mode", "modes": [1, 2, 3], "amplitudes": [1.0, 0.5, 0.25]},
        "check": {"max_rel_error": 0.05},
        "seed": 0,
    },
    # unit kernel mass across heights and orders
    "poisson-kernel": {
        "command": "extend",
        "grid": {"n": 1, "L": 4.0, "nx": 128, "Y": 4.0, "ny": 64, "gamma": 3.0,
                 "periodic": True},
        "orders": {"s1": 0.25},
        "input": {"kind": "mode", "modes": [1]},
        "check": {"kernel_mass_heights": [0.1, 1.0, 10.0]},
        "seed": 0,
    },
    # kernel lift vs finite-volume solver on a single mode
    "extension-cross-validation": {
        "command": "extend",
        "grid": {"n": 1, "L": 4.0, "nx": 256, "Y": 8.0, "ny": 128, "periodic": True},
        "orders": {"s1": 0.5},
        "input": {"kind": "mode", "modes": [1]},
        "check": {"cross_validate": True, "max_cross_error": 0.01},
        "seed": 0,
    },
    # level-set identity on the radial closed form
    "geometry-identity": {
        "command": "geometry",
        "grid": {"n": 2, "L": 4.0, "nx": 128, "Y": 4.0, "ny": 16, "gamma": 1.0,
                 "periodic": False},
        "input": {"kind": "radial-squared"},
        "check": {"eps_grad": 0.5, "max_identity_residual": 0.02},
        "seed": 0,
    },
    # vertical Cauchy-Schwarz excess on seeded band-limited fields
    "vertical-excess": {
        "command": "geometry",
        "grid": {"n": 2, "L": 4.0, "nx": 64, "Y": 4.0, "ny": 24, "gamma": 2.0,
                 "periodic": True},
        "input": {"kind": "tilted-layer", "angle_deg": 30.0},
        "check": {"vertical_excess_sweep": 20},
        "seed": 11,
    },
    # curvature/tangential energy bound for the monotone double-well pair
    "poincare-monotone": {
        "command": "poincare",
        "grid": {"n": 2, "L": 8.0, "nx": 64, "Y": 8.0, "ny": 32, "periodic": False},
        "orders": {"s1": 0.5, "s2": 0.5},
        "potential": {"name": "double_well"},
        "solver": {"init": "layer"},
        "check": {"radii": [2.0, 4.0, 8.0], "variant": "monotone"},
        "seed": 0,
    },
    # finite-family stability of the same pair
    "stability": {
        "command": "check-stability",
        "grid": {"n": 2, "L": 8.0, "nx": 64, "Y": 8.0, "ny": 32, "periodic": False},
        "orders": {"s1": 0.5, "s2": 0.5},
        "potential": {"name": "double_well"},
        "solver": {"init": "layer"},
        "check": {"radii": [4.0], "basis_size": 20},
        "seed": 0,
    },
    # dyadic annulus bound across density classes
    "annulus": {
        "command": "annulus",
        "grid": {"n": 1, "L": 20.0, "nx": 192, "Y": 20.0, "ny": 96, "gamma": 2.0,
                 "periodic": False},
        "input": {"kinds": ["ones", "gaussian", "random"]},
        "check": {"radii": [4.0, 9.0, 16.0], "count": 20},
        "seed": 7,
    },
    # quadratic energy growth of the bounded layer pair
    "energy-growth": {
        "command": "energy-sweep",
        "grid": {"n": 2, "L": 8.0, "nx": 64, "Y": 8.0, "ny": 32, "periodic": False},
        "orders": {"s1": 0.5, "s2": 0.5},
        "potential": {"name": "double_well"},
        "solver": {"init": "layer"},
        "check": {"radii": [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0], "max_slope": 2.15},
        "seed": 0,
    },
    # direction extraction on an exactly one-dimensional synthetic pair
    "symmetry-exact": {
        "command": "symmetry",
        "grid": {"n": 2, "L": 8.0, "nx": 96, "Y": 8.0, "ny": 24, "gamma": 2.0,
                 "periodic": False},
        "orders": {"s1": 0.5},
        "potential": {"name": "double_well"},
        "input": {"synthetic_pair": {"kind": "layer", "angle_deg": 20.0}},
        "check": {"threshold": 0.05, "max_angle_deg": 0.5},
        "seed": 0,
    },
    # end-to-end pipeline on the positively coupled double well
    "pipeline-symmetry": {
        "command": "pipeline-symmetry",
        "grid": {"n": 2, "L": 8.0, "nx": 64, "Y": 8.0, "ny": 32, "periodic": False},
        "orders": {"s1": 0.5, "s2": 0.5},
        "potential": {"name": "coupled_double_well", "params": {"beta": 0.25}},
        "solver": {"init": "layer"},
        "check": {"radii": [2.0, 4.0], "stability_evidence": True, "basis_size": 20,
                  "threshold": 0.05, "max_angle_deg": 2.0},
        "seed": 0,
    },
}


def get(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])
