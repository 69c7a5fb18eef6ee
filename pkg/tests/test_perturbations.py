import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from amperturb.extrapolation import constant_direction, from_density, indicator_direction
from amperturb.lattice import GridFunction, SpaceTag, grid, sup_norm
from amperturb.perturbations import (ConvergenceError, DeschReport, RankOnePerturbation, SeriesDivergenceError,
                                     desch_condition, neumann_series, perturbed_resolvent, power_iteration_spr,
                                     resolvent_RB, split_schedule)
from amperturb.semigroups import ROTATION, SHIFT, resolvent


def unit_B(n, c=1.0):
    return RankOnePerturbation.with_unit_weight(constant_direction(n, c))


def test_desch_closed_forms_at_one():
    rep = desch_condition(SHIFT, 1.0, unit_B(4000))
    assert rep.K == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert rep.spr == pytest.approx(math.exp(-1), abs=1e-6)
    assert rep.spr_power_iteration == pytest.approx(rep.spr, rel=1e-10)
    assert rep.norm_condition_met and rep.spr_condition_met


def test_indicator_case():
    B = RankOnePerturbation.with_unit_weight(indicator_direction(4000, 0.0, 0.25, 8.0))
    rep = desch_condition(SHIFT, 0.0, B)
    assert rep.K == pytest.approx(2.0, abs=1e-3)
    assert rep.spr == pytest.approx(0.25, abs=1e-3)
    assert not rep.norm_condition_met


def test_spr_never_exceeds_norm():
    with pytest.raises(ArithmeticError):
        DeschReport(1.0, 0.5, 0.6, True, True)


def test_non_positive_perturbation_refused():
    B = RankOnePerturbation.with_unit_weight(constant_direction(50, -1.0))
    with pytest.raises(ValueError):
        desch_condition(SHIFT, 1.0, B)
    rep = desch_condition(SHIFT, 1.0, B, require_positive=False)
    assert rep.K > 0


def test_weight_shape_checked():
    with pytest.raises(ValueError):
        RankOnePerturbation(np.ones(3), constant_direction(10))


def test_neumann_matches_closed_form():
    n = 500
    B = unit_B(n)
    f = GridFunction(SpaceTag.SHIFT, np.sin(3 * grid(n)) * (1 - grid(n)))
    res = neumann_series(SHIFT, 1.0, B, f, tol=1e-14)
    assert sup_norm(res.value - res.closed_form) <= 1e-8 * sup_norm(res.closed_form)
    # ratio of consecutive terms is the spectral radius
    r = np.array(res.term_norms[2:6]) / np.array(res.term_norms[1:5])
    assert np.allclose(r, res.spr, rtol=1e-9)


def test_neumann_solves_the_perturbed_equation():
    # (lam - A) u - <w, u> h = f for h in E: u = R f + <w, u> R h
    n = 400
    B = unit_B(n)
    f = GridFunction(SpaceTag.SHIFT, 1 - grid(n))
    u = perturbed_resolvent(SHIFT, 2.0, B, f, tol=1e-14)
    assert sup_norm(u - resolvent(SHIFT, 2.0, f) - resolvent_RB(SHIFT, 2.0, B, u)) < 1e-12


@given(st.integers(0, 1000), st.floats(0.0, 1.0))
@settings(max_examples=30, deadline=None)
def test_domination_and_monotone_chain(seed, s):
    n = 120
    rng = np.random.default_rng(seed)
    v = rng.uniform(0, 1, n + 1)
    v[-1] = 0.0
    f = GridFunction(SpaceTag.SHIFT, v)
    B = unit_B(n)
    lo = perturbed_resolvent(SHIFT, 1.0, B.scaled(s * 0.5), f, tol=1e-13)
    hi = perturbed_resolvent(SHIFT, 1.0, B.scaled(0.5 + s * 0.5), f, tol=1e-13)
    base = resolvent(SHIFT, 1.0, f)
    assert np.all(lo.values >= base.values - 1e-12)
    assert np.all(hi.values >= lo.values - 1e-12)


def test_divergence_signal():
    n = 200
    B = unit_B(n, 3.0)          # spr(R(1) B) = 3 / e > 1
    f = GridFunction(SpaceTag.SHIFT, 1 - grid(n))
    with pytest.raises(SeriesDivergenceError) as info:
        neumann_series(SHIFT, 1.0, B, f)
    assert len(info.value.term_norms) > 2


def test_non_convergence_signal():
    n = 100
    B = unit_B(n, 0.999 * math.e)
    f = GridFunction(SpaceTag.SHIFT, 1 - grid(n))
    with pytest.raises(ConvergenceError):
        neumann_series(SHIFT, 1.0, B, f, tol=1e-14, max_terms=20)


def test_power_iteration_periodic():
    n = 300
    x = grid(n)
    mu = 1 + 0.5 * np.cos(2 * np.pi * x)
    mu[-1] = mu[0]
    B = RankOnePerturbation.with_unit_weight(from_density(mu, SpaceTag.PERIODIC))
    rep = desch_condition(ROTATION, 2.0, B)
    assert rep.spr == pytest.approx(0.5, abs=1e-6)   # int R(2) mu = int mu / 2
    assert power_iteration_spr(ROTATION, 2.0, B) == pytest.approx(rep.spr, rel=1e-9)


def test_split_schedule_indicator():
    B = RankOnePerturbation.with_unit_weight(indicator_direction(4000, 0.0, 0.25, 8.0))
    stages = split_schedule(SHIFT, 0.0, B)
    assert len(stages) == 3
    assert [round(s.K, 3) for s in stages] == [0.667, 0.727, 0.8]
    assert all(s.K < 1 for s in stages)
    assert [s.base_scale for s in stages] == [0.0, 1 / 3, 2 / 3]


def test_split_schedule_trivial_when_K_small():
    stages = split_schedule(SHIFT, 1.0, unit_B(100))
    assert len(stages) == 1 and stages[0].base_scale == 0.0


def test_split_schedule_refuses_supercritical():
    with pytest.raises(SeriesDivergenceError):
        split_schedule(SHIFT, 1.0, unit_B(100, 3.0))
