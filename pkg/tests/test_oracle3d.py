import numpy as np
import pytest
from numpy.testing import assert_allclose

from flatgap.geometry import Profile
from flatgap.harmonics import ModeIndex
from flatgap.oracle3d import mode_energy_fraction, solve_voxel

PROFILE = Profile(a=1.0, r0=0.25)


@pytest.fixture(scope="module")
def x1_solution():
    return solve_voxel(PROFILE, 0.1, lambda x, y, z: x)


def test_linear_data_stays_in_mode_one(x1_solution):
    frac, energy = mode_energy_fraction(x1_solution, ModeIndex(1, 1))
    assert frac >= 0.999
    assert max(energy, key=energy.get) == ModeIndex(1, 1)


def test_degree_two_data_stays_in_mode_two():
    sol = solve_voxel(PROFILE, 0.1, lambda x, y, z: x * x - y * y)
    frac, _ = mode_energy_fraction(sol, ModeIndex(2, 1))
    assert frac >= 0.999


def test_constant_data_gives_constant():
    sol = solve_voxel(PROFILE, 0.1, lambda x, y, z: 2.0 + 0 * x)
    assert_allclose(sol.u, 2.0, atol=1e-10)


def test_zero_data_gives_zero():
    sol = solve_voxel(PROFILE, 0.1, lambda x, y, z: 0 * x)
    assert np.max(np.abs(sol.u)) <= 1e-10


def test_solution_is_odd_in_x1(x1_solution):
    u = x1_solution.u
    assert_allclose(u, -u[::-1], atol=1e-10)


def test_inclusions_are_excluded(x1_solution):
    s = x1_solution
    assert s.inside.any() and not s.inside.all()
    # the flat zone at |x'| < r0 is a slab of height eps
    i = np.argmin(np.abs(s.x))
    col = s.inside[i, i]
    assert np.all(np.abs(s.z[col]) <= 0.05 + 1e-12)
