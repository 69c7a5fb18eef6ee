"""Elements of the extrapolation space and its positive cone.

An element g of E_{-1} is held through an antiderivative F.  On the shift
space g = F' and g is positive exactly when F increases; a step function
with a negative part is therefore not positive, even though its resolvent
may be.
"""
import numpy as np

from amperturb import SHIFT, GridFunction, SpaceTag, embed, extrapolated_resolvent, grid, is_positive, norm_minus_one
from amperturb.extrapolation import (PERIODIC_CONE_DIRECTION, indicator_direction, periodic_cone_direction_oracle,
                                     sign_step_direction)

n = 1000
x = grid(n)

f = GridFunction(SpaceTag.SHIFT, (1 - x) * (0.5 + np.cos(6 * x)))
print("f changes sign        :", f.values.min() < 0, "  is_positive(embed f):", is_positive(embed(f)))

h = indicator_direction(n, 0.0, 0.25, 8.0)
print("8 chi[0,1/4] positive :", is_positive(h), "  |h|_{-1} at lambda=0:", norm_minus_one(SHIFT, 0.0, h))

step = sign_step_direction(n)
print("sign step positive    :", is_positive(step))
print("R(0) of the step      : min", extrapolated_resolvent(SHIFT, 0.0, step).values.min())

# on the circle F - F' = mu >= 0 makes F e^{-x} move one way; the oracle finds which
print("periodic cone direction:", periodic_cone_direction_oracle(), "(library constant", PERIODIC_CONE_DIRECTION, ")")
