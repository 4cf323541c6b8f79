"""Shared fixtures: default grids, symbols and calibration states."""

import numpy as np
import pytest

from wavefront_lab.quantum import (
    GridState,
    QuadraticHamiltonianSpec,
    ground_state,
    hermite_function,
    make_gaussian,
    make_smooth_bump,
    make_truncated_jump,
)
from wavefront_lab.symbols import ClassicalSymbol


DEFAULT_N = 2048
DEFAULT_L = 12.0


def grid_axis(n=DEFAULT_N, L=DEFAULT_L):
    return -L + (2 * L / n) * np.arange(n)


def state_1d(values, n=DEFAULT_N, L=DEFAULT_L):
    return GridState(d=1, n=n, L=L, values=values)


@pytest.fixture(scope="session")
def x_grid():
    return grid_axis()


@pytest.fixture()
def jump_state(x_grid):
    return state_1d(make_truncated_jump(x_grid, x0=1.0))


@pytest.fixture()
def gaussian_state(x_grid):
    return state_1d(make_gaussian(x_grid, x0=0.5, sigma=1.0))


@pytest.fixture()
def smooth_bump_state(x_grid):
    return state_1d(make_smooth_bump(x_grid, x0=0.0, radius=2.0))


@pytest.fixture()
def ground_state_1d(x_grid):
    return state_1d(ground_state(x_grid))


@pytest.fixture()
def hermite_states(x_grid):
    return [state_1d(hermite_function(k, x_grid)) for k in range(6)]


@pytest.fixture()
def iso_symbol():
    return ClassicalSymbol.oscillator([1.0])


@pytest.fixture()
def aniso_symbol():
    return ClassicalSymbol.oscillator([1.0, 2.0])


@pytest.fixture()
def iso_spec():
    return QuadraticHamiltonianSpec(omegas=[1.0])
