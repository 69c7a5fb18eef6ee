"""The two unperturbed semigroups and their resolvents.

The nilpotent left shift moves data towards x = 0 and loses it at the
boundary; after time 1 nothing is left.  The rotation wraps around and
returns to the start after one period.
"""
import numpy as np

from amperturb import ROTATION, SHIFT, GridFunction, SpaceTag, apply_semigroup, grid, resolvent, sup_norm

n = 400
x = grid(n)

f = GridFunction(SpaceTag.SHIFT, (1 - x) * np.exp(x))
for t in (0.0, 0.25, 0.5, 1.0):
    print(f"shift     t={t:<4}  sup|T(t) f| = {sup_norm(apply_semigroup(SHIFT, t, f)):.6f}")

v = np.sin(2 * np.pi * x) ** 2 + 0.1
v[-1] = v[0]
p = GridFunction(SpaceTag.PERIODIC, v)
print("rotation  T(1) p == p on the nodes:", np.array_equal(apply_semigroup(ROTATION, 1.0, p).values, p.values))

# R(0, A) f = int_x^1 f: for f = 1 - x this is (1 - x)^2 / 2, reproduced to rounding
g = GridFunction(SpaceTag.SHIFT, 1 - x)
print("R(0) (1-x) error:", np.max(np.abs(resolvent(SHIFT, 0.0, g).values - (1 - x) ** 2 / 2)))

# constants are fixed by R(1, A) on the circle
c = GridFunction(SpaceTag.PERIODIC, np.full(n + 1, 2.0))
print("R(1) c - c      :", sup_norm(resolvent(ROTATION, 1.0, c) - c))
