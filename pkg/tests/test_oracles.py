import numpy as np
import pytest

from amperturb.lattice import GridFunction, SpaceTag, grid, integrate, sup_norm
from amperturb.oracles import (characteristics_solution, discrete_resolvent_oracle, upwind_matrix,
                               volterra_mass)
from amperturb.semigroups import ROTATION, SHIFT, resolvent


def one_minus_x(n):
    return GridFunction(SpaceTag.SHIFT, 1.0 - grid(n))


def test_volterra_richardson():
    u0 = one_minus_x(200)
    h = np.ones(201)
    coarse = volterra_mass(u0, h, 1.0, 1e-4)
    fine = volterra_mass(u0, h, 1.0, 5e-5)
    assert np.max(np.abs(coarse.mass - fine.mass[::2])) < 1e-7


def test_volterra_without_source_is_the_free_mass():
    u0 = one_minus_x(100)
    sol = volterra_mass(u0, np.zeros(101), 0.5, 1e-3)
    assert np.allclose(sol.mass, (1 - sol.times) ** 2 / 2, atol=1e-14)


def test_characteristics_reduce_to_the_shift():
    u0 = one_minus_x(100)
    sol = volterra_mass(u0, np.zeros(101), 0.5, 1e-3)
    out = characteristics_solution(u0, np.zeros(101), sol, 0.3)
    assert np.allclose(out.values, np.maximum(0.0, 0.7 - grid(100)), atol=1e-14)


def test_characteristics_mass_consistency():
    u0 = one_minus_x(1000)
    h = np.ones(1001)
    sol = volterra_mass(u0, h, 0.6, 1e-4)
    for t in (0.2, 0.6):
        assert integrate(characteristics_solution(u0, h, sol, t)) == pytest.approx(sol.mass_at(t), abs=1e-6)


def test_characteristics_horizon():
    u0 = one_minus_x(10)
    sol = volterra_mass(u0, np.ones(11), 0.5, 1e-2)
    with pytest.raises(ValueError):
        characteristics_solution(u0, np.ones(11), sol, 0.8)


def test_oracle_input_checks():
    p = GridFunction(SpaceTag.PERIODIC, np.ones(11))
    with pytest.raises(ValueError):
        volterra_mass(p, np.ones(11), 0.5, 1e-2)
    with pytest.raises(ValueError):
        volterra_mass(one_minus_x(10), np.ones(5), 0.5, 1e-2)
    with pytest.raises(ValueError):
        discrete_resolvent_oracle(ROTATION, 0.0, p)


def test_upwind_matrix_shapes():
    assert upwind_matrix(8, False).shape == (8, 8)
    D = upwind_matrix(8, True)
    assert np.allclose(D @ np.ones(8), 0.0)


def test_periodic_upwind_oracle_close_to_resolvent():
    n = 2000
    v = np.cos(2 * np.pi * grid(n))
    v[-1] = v[0]
    f = GridFunction(SpaceTag.PERIODIC, v)
    assert sup_norm(discrete_resolvent_oracle(ROTATION, 1.0, f) - resolvent(ROTATION, 1.0, f)) < 5e-3
