"""Grid-sampled continuous functions on [0, 1] with the sup norm.

A :class:`GridFunction` is the concrete stand-in for an element of one of the
two AM-spaces used throughout the package:

* ``SpaceTag.SHIFT``    -- continuous f with f(1) = 0,
* ``SpaceTag.PERIODIC`` -- continuous f with f(0) = f(1).

Values live on the uniform grid x_i = i / n_cells and are interpolated
piecewise linearly between nodes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

#: relative tolerance for "f >= 0" checks on computed data
POSITIVITY_RTOL = 1e-9


class SpaceTag(enum.Enum):
    SHIFT = "shift"
    PERIODIC = "periodic"


def grid(n_cells: int) -> np.ndarray:
    """Nodes i / n_cells, i = 0..n_cells (exact rationals, not linspace)."""
    return np.arange(n_cells + 1) / n_cells


def trapezoid_weights(n_cells: int) -> np.ndarray:
    w = np.full(n_cells + 1, 1.0 / n_cells)
    w[0] = w[-1] = 0.5 / n_cells
    return w


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal samples of a continuous function on [0, 1].

    Boundary conditions are checked exactly at construction; a violating
    array is rejected rather than repaired.
    """

    space_tag: SpaceTag
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("values must be a 1-d array with at least two nodes")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        if self.space_tag is SpaceTag.SHIFT and values[-1] != 0.0:
            raise ValueError(f"shift-space function must vanish at x=1, got {values[-1]!r}")
        if self.space_tag is SpaceTag.PERIODIC and values[0] != values[-1]:
            raise ValueError("periodic-space function needs f(0) == f(1)")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, func, n_cells: int, space_tag: SpaceTag = SpaceTag.SHIFT) -> "GridFunction":
        return cls(space_tag, np.asarray(func(grid(n_cells)), dtype=float) * np.ones(n_cells + 1))

    @classmethod
    def zeros(cls, n_cells: int, space_tag: SpaceTag = SpaceTag.SHIFT) -> "GridFunction":
        return cls(space_tag, np.zeros(n_cells + 1))

    @property
    def n_cells(self) -> int:
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        return grid(self.n_cells)

    def _check_compatible(self, other: "GridFunction"):
        if not isinstance(other, GridFunction):
            raise TypeError(f"expected GridFunction, got {type(other).__name__}")
        if other.space_tag is not self.space_tag:
            raise ValueError(f"space mismatch: {self.space_tag.value} vs {other.space_tag.value}")
        if other.n_cells != self.n_cells:
            raise ValueError(f"grid mismatch: {self.n_cells} vs {other.n_cells} cells")

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.space_tag, values)

    def __add__(self, other):
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, scalar):
        return self.with_values(float(scalar) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.with_values(self.values / float(scalar))

    def __repr__(self):
        return f"GridFunction({self.space_tag.value}, n_cells={self.n_cells}, sup={sup_norm(self):.6g})"


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def lattice_sup(f: GridFunction, g: GridFunction) -> GridFunction:
    f._check_compatible(g)
    return f.with_values(np.maximum(f.values, g.values))


def lattice_inf(f: GridFunction, g: GridFunction) -> GridFunction:
    f._check_compatible(g)
    return f.with_values(np.minimum(f.values, g.values))


def absolute(f: GridFunction) -> GridFunction:
    """|f| = sup{f, -f}."""
    return lattice_sup(f, -f)


def positive_part(f: GridFunction) -> GridFunction:
    return lattice_sup(f, GridFunction.zeros(f.n_cells, f.space_tag))


def negative_part(f: GridFunction) -> GridFunction:
    return positive_part(-f)


def integrate(f: GridFunction) -> float:
    """Composite trapezoid value of the integral over [0, 1]."""
    return float(trapezoid_weights(f.n_cells) @ f.values)


def interp_eval(f: GridFunction, x):
    """Piecewise-linear evaluation of ``f`` at points of [0, 1]."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > 1.0) or not np.all(np.isfinite(xa)):
        raise ValueError("evaluation points must lie in [0, 1]")
    out = np.interp(xa, f.x, f.values)
    return float(out) if out.ndim == 0 else out


def positivity_tolerance(f: GridFunction) -> float:
    return POSITIVITY_RTOL * (1.0 + sup_norm(f))


def is_nonnegative(f: GridFunction, tol: float | None = None) -> bool:
    """Node-wise ``f >= -tol``; ``tol`` defaults to the relative positivity tolerance."""
    if tol is None:
        tol = positivity_tolerance(f)
    return bool(np.all(f.values >= -tol))


def tail_integral(values: np.ndarray, z) -> np.ndarray:
    """Exact integral over [z, 1] of the piecewise-linear interpolant of nodal ``values``.

    Points z >= 1 give 0, points z <= 0 give the full integral.
    """
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    dx = 1.0 / n
    head = np.concatenate(([0.0], np.cumsum(0.5 * dx * (values[:-1] + values[1:]))))
    z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
    i = np.minimum(np.floor(z * n).astype(int), n - 1)
    vz = np.interp(z, grid(n), values)
    partial = 0.5 * (z - i * dx) * (values[i] + vz)
    return head[-1] - (head[i] + partial)
