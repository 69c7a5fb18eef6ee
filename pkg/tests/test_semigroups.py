import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from amperturb.lattice import GridFunction, SpaceTag, grid, sup_norm
from amperturb.semigroups import (ROTATION, SHIFT, apply_semigroup, laplace_resolvent_oracle, resolvent,
                                  resolvent_norm)
from amperturb.oracles import discrete_resolvent_oracle


def one_minus_x(n):
    return GridFunction(SpaceTag.SHIFT, 1.0 - grid(n))


def test_shift_by_grid_multiple_is_exact():
    f = GridFunction.sample(lambda x: np.sin(3 * x) * (1 - x), 100)
    g = apply_semigroup(SHIFT, 0.25, f)
    assert np.array_equal(g.values[:76], f.values[25:])
    assert np.all(g.values[76:] == 0.0)


def test_shift_is_nilpotent():
    f = one_minus_x(50)
    assert sup_norm(apply_semigroup(SHIFT, 1.0, f)) == 0.0
    assert sup_norm(apply_semigroup(SHIFT, 3.7, f)) == 0.0


def test_rotation_period_is_identity():
    v = np.cos(2 * np.pi * grid(64)) + 0.3 * np.sin(4 * np.pi * grid(64))
    v[-1] = v[0]
    f = GridFunction(SpaceTag.PERIODIC, v)
    assert np.array_equal(apply_semigroup(ROTATION, 1.0, f).values, f.values)
    assert np.array_equal(apply_semigroup(ROTATION, 2.0, f).values, f.values)


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5))
@settings(max_examples=40, deadline=None)
def test_semigroup_law_on_the_grid(s, t):
    n = 40
    s, t = round(s * n) / n, round(t * n) / n
    f = GridFunction.sample(lambda x: (1 - x) * np.exp(x), n)
    lhs = apply_semigroup(SHIFT, s + t, f)
    rhs = apply_semigroup(SHIFT, s, apply_semigroup(SHIFT, t, f))
    assert np.allclose(lhs.values, rhs.values, atol=1e-14)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        apply_semigroup(SHIFT, -0.1, one_minus_x(10))


def test_resolvent_at_zero_of_one_minus_x():
    # int_x^1 (1 - s) ds = (1 - x)^2 / 2; exact for linear data
    r = resolvent(SHIFT, 0.0, one_minus_x(10))
    assert np.allclose(r.values, (1 - grid(10)) ** 2 / 2, atol=1e-15)


@pytest.mark.parametrize("lam", [-3.0, 0.0, 0.5, 2.0, 7.0])
def test_shift_resolvent_matches_quadrature(lam):
    n = 200
    f = GridFunction.sample(lambda x: np.cos(5 * x) * (1 - x), n)
    r = resolvent(SHIFT, lam, f)
    fi = lambda s: np.interp(s, f.x, f.values)
    for i in (0, 37, 150, 199):
        x = f.x[i]
        ref = quad(lambda s: math.exp(lam * (x - s)) * fi(s), x, 1, points=f.x[(f.x > x)], limit=400)[0]
        assert r.values[i] == pytest.approx(ref, abs=1e-12)


def test_resolvent_constants_periodic():
    c = GridFunction(SpaceTag.PERIODIC, np.full(33, 2.5))
    assert sup_norm(resolvent(ROTATION, 1.0, c) - c) < 1e-13
    with pytest.raises(ValueError):
        resolvent(ROTATION, 0.0, c)


def test_resolvent_norms():
    assert resolvent_norm(SHIFT, 1.0) == pytest.approx(1 - math.exp(-1))
    assert resolvent_norm(SHIFT, 0.0) == pytest.approx(1.0)
    assert resolvent_norm(ROTATION, 4.0) == pytest.approx(0.25)


@pytest.mark.parametrize("gen,space", [(SHIFT, SpaceTag.SHIFT), (ROTATION, SpaceTag.PERIODIC)])
def test_laplace_transform_of_the_semigroup(gen, space):
    n = 400
    v = np.sin(np.pi * grid(n)) ** 2
    v[-1] = v[0] = 0.0
    f = GridFunction(space, v)
    ref = laplace_resolvent_oracle(gen, 2.0, f, t_max=20.0, dt=1.0 / n)
    assert sup_norm(resolvent(gen, 2.0, f) - ref) < 1e-4


@given(st.lists(st.floats(0, 1), min_size=5, max_size=30), st.floats(0.0, 5.0))
@settings(max_examples=50, deadline=None)
def test_resolvent_is_positive(vals, lam):
    v = np.array(vals)
    v[-1] = 0.0
    r = resolvent(SHIFT, lam, GridFunction(SpaceTag.SHIFT, v))
    assert np.all(r.values >= -1e-15)


def test_upwind_oracle_converges_first_order():
    f_exact = lambda x: (1 - x) * np.cos(2 * x)
    ref = resolvent(SHIFT, 1.5, GridFunction.sample(f_exact, 4096))
    errs = []
    for n in (128, 256, 512):
        u = discrete_resolvent_oracle(SHIFT, 1.5, GridFunction.sample(f_exact, n))
        errs.append(np.max(np.abs(u.values - np.interp(u.x, ref.x, ref.values))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 0.9)
