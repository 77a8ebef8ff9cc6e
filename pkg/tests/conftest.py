import time

import numpy as np
import pytest

from fraclab.grids import FractionalOrder, HalfSpaceGrid, TraceField
from fraclab.potentials import double_well
from fraclab.solver import solve_coupled_system


def _layer_pair(nx: int, ny: int):
    order = FractionalOrder(0.5)
    grid = HalfSpaceGrid(n=2, L=8.0, nx=nx, Y=8.0, ny=ny, grading_gamma=2.0, periodic_x=False)
    x2 = grid.x_mesh()[1]
    u0 = TraceField(grid, np.tanh(x2))
    v0 = TraceField(grid, -np.tanh(x2))
    t0 = time.perf_counter()
    pair = solve_coupled_system(double_well(), order, order, u0, v0)
    return pair, time.perf_counter() - t0


@pytest.fixture(scope="session")
def monotone_pair_small():
    """Monotone uncoupled double-well pair on a coarse planar grid."""
    pair, _ = _layer_pair(64, 32)
    return pair


@pytest.fixture(scope="session")
def monotone_pair_fine():
    """Same system at doubled tangential resolution, with the solve time."""
    return _layer_pair(128, 40)
