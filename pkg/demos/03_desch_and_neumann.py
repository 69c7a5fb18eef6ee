"""Desch constants and the perturbed resolvent for B f = (int f) h.

K(lambda) = ||R(lambda, A_{-1}) B|| decides whether the Dyson-Phillips series
converges geometrically; spr(lambda) decides whether the Neumann series for
the perturbed resolvent converges at all.
"""
import math

import numpy as np

from amperturb import SHIFT, GridFunction, SeriesDivergenceError, SpaceTag, desch_condition, grid, neumann_series
from amperturb.extrapolation import constant_direction
from amperturb.perturbations import RankOnePerturbation

n = 4000
B = RankOnePerturbation.with_unit_weight(constant_direction(n))

print(" lambda        K   (1-e^-l)/l       spr")
for lam in (0.5, 1.0, 2.0, 5.0):
    rep = desch_condition(SHIFT, lam, B)
    print(f"{lam:7.2f} {rep.K:8.6f} {(1 - math.exp(-lam)) / lam:12.6f} {rep.spr:9.6f}")

f = GridFunction(SpaceTag.SHIFT, 1 - grid(n))
res = neumann_series(SHIFT, 1.0, B, f, tol=1e-14)
print(f"\nNeumann series: {len(res.term_norms)} terms, closed-form gap "
      f"{np.max(np.abs(res.value.values - res.closed_form.values)):.2e}")

try:
    neumann_series(SHIFT, 1.0, B.scaled(3.0), f)
except SeriesDivergenceError as exc:
    print("scaled by 3:", exc)
