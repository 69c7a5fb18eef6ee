import numpy as np
import pytest
from hypothesis import given, strategies as st

from amperturb.lattice import (GridFunction, SpaceTag, absolute, grid, integrate, interp_eval, is_nonnegative,
                               lattice_inf, lattice_sup, negative_part, positive_part, sup_norm, tail_integral)


def shift_fn(values):
    v = np.asarray(values, dtype=float).copy()
    v[-1] = 0.0
    return GridFunction(SpaceTag.SHIFT, v)


nodal = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=40)


def test_grid_nodes_are_exact():
    assert grid(4).tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert grid(1000)[-1] == 1.0


def test_boundary_conditions_are_enforced():
    with pytest.raises(ValueError):
        GridFunction(SpaceTag.SHIFT, np.array([1.0, 0.5, 1e-15]))
    with pytest.raises(ValueError):
        GridFunction(SpaceTag.PERIODIC, np.array([1.0, 0.5, 1.0 + 1e-15]))
    GridFunction(SpaceTag.PERIODIC, np.array([1.0, 0.5, 1.0]))


def test_values_are_read_only():
    f = shift_fn([1.0, 2.0, 0.0])
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_mixing_spaces_or_grids_fails():
    f = shift_fn([1.0, 2.0, 0.0])
    with pytest.raises(ValueError):
        f + GridFunction(SpaceTag.PERIODIC, np.array([1.0, 2.0, 1.0]))
    with pytest.raises(ValueError):
        f + shift_fn([1.0, 2.0, 3.0, 0.0])


def test_interp_of_x_squared():
    # the interpolant of x^2 at n = 2 is linear on [0, 1/2]: value 1/8 at x = 1/4
    g = GridFunction.sample(lambda x: x ** 2 * (x < 1), 2, SpaceTag.SHIFT)
    assert interp_eval(g, 0.25) == pytest.approx(0.125, abs=1e-15)
    with pytest.raises(ValueError):
        interp_eval(g, 1.5)


def test_integrate_linear_exactly():
    f = GridFunction(SpaceTag.SHIFT, 1.0 - grid(7))
    assert integrate(f) == pytest.approx(0.5, abs=1e-15)


@given(nodal, st.floats(0.0, 1.0))
def test_tail_integral_matches_trapezoid_at_nodes(values, z):
    v = np.asarray(values)
    n = v.size - 1
    x = grid(n)
    k = int(np.floor(z * n))
    zn = x[k]
    expected = np.trapezoid(v[k:], x[k:]) if k < n else 0.0
    assert tail_integral(v, zn) == pytest.approx(expected, abs=1e-12)


@given(nodal, nodal)
def test_lattice_identities(a, b):
    m = min(len(a), len(b))
    f, g = shift_fn(a[:m]), shift_fn(b[:m])
    assert np.array_equal((lattice_sup(f, g) + lattice_inf(f, g)).values, (f + g).values)
    assert np.allclose((positive_part(f) - negative_part(f)).values, f.values)
    assert np.allclose(absolute(f).values, (positive_part(f) + negative_part(f)).values)
    # AM property on the positive cone
    pf, pg = absolute(f), absolute(g)
    assert sup_norm(lattice_sup(pf, pg)) == max(sup_norm(pf), sup_norm(pg))


def test_is_nonnegative_tolerance():
    f = shift_fn([1.0, -5e-10, 0.0])
    assert is_nonnegative(f)
    assert not is_nonnegative(shift_fn([1.0, -1e-6, 0.0]))
