"""Elements of the extrapolation space, stored through a continuous antiderivative.

Shift space:    g = dF          with F(1) = 0            (``DERIVATIVE_OF_F``)
Periodic space: g = F - dF      with F(0) = F(1)         (``F_MINUS_DERIVATIVE``)

Here d is the distributional derivative.  The extrapolated generator acts as d
on these representatives, which makes the extrapolated semigroup and
resolvent computable exactly through F:

    T_{-1}(t) g   <->  T(t) F
    R(lam, A_{-1}) dF        = lam R(lam, A) F - F
    R(lam, A_{-1}) (F - dF)  = F - (lam - 1) R(lam, A) F

A positive element is a positive continuous measure: F non-decreasing in the
shift case, F e^{-x} non-increasing in the periodic case.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .lattice import GridFunction, SpaceTag, grid, positivity_tolerance, sup_norm, tail_integral
from .semigroups import GeneratorSpec, apply_semigroup, generator_for, resolvent, resolvent_values

#: Sign of the monotonicity of F(x) e^{-x} on the periodic positive cone.
#: -1 means non-increasing.  Fixed by :func:`periodic_cone_direction_oracle`;
#: differentiating gives e^{-x} (F - F') = -(F e^{-x})', so a positive measure
#: F - F' forces F e^{-x} to decrease.
PERIODIC_CONE_DIRECTION = -1


class Representation(enum.Enum):
    DERIVATIVE_OF_F = "derivative-of-F"
    F_MINUS_DERIVATIVE = "F-minus-derivative"


def representation_for(space: SpaceTag) -> Representation:
    return Representation.DERIVATIVE_OF_F if space is SpaceTag.SHIFT else Representation.F_MINUS_DERIVATIVE


@dataclass(frozen=True, eq=False)
class Density:
    """An integrable density x -> base(x + offset), cut off beyond 1 or taken mod 1.

    ``base`` holds nodal samples of a piecewise-linear function on [0, 1].  The
    offset lets the extrapolated semigroup shift a density without resampling.
    """

    base: np.ndarray
    periodic: bool
    offset: float = 0.0

    def __post_init__(self):
        base = np.array(self.base, dtype=float)
        if base.ndim != 1 or base.size < 2 or not np.all(np.isfinite(base)):
            raise ValueError("density samples must be a finite 1-d array")
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        if self.periodic:
            object.__setattr__(self, "offset", math.fmod(self.offset, 1.0))

    @property
    def n_cells(self) -> int:
        return self.base.size - 1

    def shifted(self, t: float) -> "Density":
        return Density(self.base, self.periodic, self.offset + t)

    def scaled(self, c: float) -> "Density":
        return Density(c * self.base, self.periodic, self.offset)

    def samples(self) -> np.ndarray:
        x = grid(self.n_cells) + self.offset
        if self.periodic:
            return np.interp(np.mod(x, 1.0), grid(self.n_cells), self.base)
        if self.offset == 0.0:
            return self.base.copy()
        if self.offset >= 1.0:
            return np.zeros_like(self.base)
        return np.where(x <= 1.0, np.interp(np.minimum(x, 1.0), grid(self.n_cells), self.base), 0.0)

    def antiderivative(self) -> np.ndarray:
        """Nodal values of the F that represents this density.

        Shift case: F(x) = -int_x^1 density, computed exactly from ``base``.
        Periodic case: the periodic solution of F - F' = density.
        """
        if self.periodic:
            return resolvent_values(self.samples(), 1.0, True)
        return -tail_integral(self.base, grid(self.n_cells) + self.offset)


@dataclass(frozen=True, eq=False)
class ExtrapolatedElement:
    """g in E_{-1}, stored as its antiderivative F (plus an optional density).

    When a density is attached it must reproduce F up to quadrature error;
    this is checked at construction.
    """

    antiderivative: GridFunction
    representation: Representation
    density: Density | None = None

    def __post_init__(self):
        F = self.antiderivative
        if not isinstance(F, GridFunction):
            raise TypeError("antiderivative must be a GridFunction")
        if representation_for(F.space_tag) is not self.representation:
            raise ValueError(f"{self.representation.value} does not match the {F.space_tag.value} space")
        if self.density is not None:
            d = self.density
            if d.n_cells != F.n_cells or d.periodic != (F.space_tag is SpaceTag.PERIODIC):
                raise ValueError("density grid/space does not match the antiderivative")
            err = density_mismatch(self)
            if err > _density_tolerance(d, F):
                raise ValueError(f"density does not reproduce the antiderivative (mismatch {err:.3g})")

    @property
    def space(self) -> SpaceTag:
        return self.antiderivative.space_tag

    @property
    def n_cells(self) -> int:
        return self.antiderivative.n_cells

    @classmethod
    def zero(cls, n_cells: int, space: SpaceTag = SpaceTag.SHIFT) -> "ExtrapolatedElement":
        return cls(GridFunction.zeros(n_cells, space), representation_for(space),
                   Density(np.zeros(n_cells + 1), space is SpaceTag.PERIODIC))

    @classmethod
    def from_antiderivative(cls, F: GridFunction) -> "ExtrapolatedElement":
        return cls(F, representation_for(F.space_tag))

    def scaled(self, c: float) -> "ExtrapolatedElement":
        d = None if self.density is None else self.density.scaled(c)
        return ExtrapolatedElement(c * self.antiderivative, self.representation, d)

    def __mul__(self, c):
        return self.scaled(float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.scaled(-1.0)

    def __add__(self, other: "ExtrapolatedElement") -> "ExtrapolatedElement":
        if other.representation is not self.representation:
            raise ValueError("cannot add elements with different representations")
        density = None
        if self.density is not None and other.density is not None:
            density = Density(self.density.samples() + other.density.samples(), self.density.periodic)
        F = self.antiderivative + other.antiderivative
        try:
            return ExtrapolatedElement(F, self.representation, density)
        except ValueError:
            # resampling shifted densities onto nodes can cost more than the tolerance
            return ExtrapolatedElement(F, self.representation)

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        kind = "density" if self.density is not None else "measure"
        return f"ExtrapolatedElement({self.representation.value}, n_cells={self.n_cells}, {kind})"


def _density_tolerance(d: Density, F: GridFunction) -> float:
    s = d.samples()
    variation = float(np.sum(np.abs(np.diff(s))))
    return (variation + float(np.max(np.abs(s)))) / d.n_cells + 1e-9 * (1.0 + sup_norm(F))


def density_mismatch(g: ExtrapolatedElement) -> float:
    """Sup distance between F and the antiderivative rebuilt from the density."""
    if g.density is None:
        raise ValueError("element carries no density")
    return float(np.max(np.abs(g.density.antiderivative() - g.antiderivative.values)))


def embed(f: GridFunction) -> ExtrapolatedElement:
    """The image of f in E_{-1}: F = -int_x^1 f (shift) or F - F' = f (periodic)."""
    if f.space_tag is SpaceTag.SHIFT:
        F = -resolvent(generator_for(SpaceTag.SHIFT), 0.0, f)
    else:
        F = resolvent(generator_for(SpaceTag.PERIODIC), 1.0, f)
    return ExtrapolatedElement(F, representation_for(f.space_tag),
                               Density(f.values, f.space_tag is SpaceTag.PERIODIC))


def from_density(samples, space: SpaceTag = SpaceTag.SHIFT) -> ExtrapolatedElement:
    """Element with piecewise-linear density ``samples`` (no boundary condition on the samples)."""
    d = Density(samples, space is SpaceTag.PERIODIC)
    F = GridFunction(space, _fix_boundary(d.antiderivative(), space))
    return ExtrapolatedElement(F, representation_for(space), d)


def _fix_boundary(values: np.ndarray, space: SpaceTag) -> np.ndarray:
    # the formulas produce these boundary values exactly up to the last rounding
    values = values.copy()
    if space is SpaceTag.SHIFT:
        values[-1] = 0.0
    else:
        values[-1] = values[0]
    return values


def cone_test_values(g: ExtrapolatedElement) -> np.ndarray:
    """The function whose monotonicity decides positivity (F, or F e^{-x})."""
    F = g.antiderivative
    if g.representation is Representation.DERIVATIVE_OF_F:
        return F.values
    return F.values * np.exp(-F.x)


def is_positive(g: ExtrapolatedElement) -> bool:
    """Membership in the positive cone of E_{-1}.

    Shift case: F non-decreasing node to node.  Periodic case: F e^{-x}
    monotone in the direction :data:`PERIODIC_CONE_DIRECTION`.  When a
    density is attached it must also be non-negative at the nodes, since the
    nodal increments of F cannot see a dip of the density inside one cell.
    """
    F = g.antiderivative
    tol = positivity_tolerance(F)
    steps = np.diff(cone_test_values(g))
    if g.representation is Representation.F_MINUS_DERIVATIVE:
        steps = PERIODIC_CONE_DIRECTION * steps
    if np.any(steps < -tol):
        return False
    if g.density is not None:
        s = g.density.samples()
        if np.any(s < -1e-9 * (1.0 + np.max(np.abs(s)))):
            return False
    return True


def periodic_cone_direction_oracle(n_cells: int = 2000, seed: int = 0) -> int:
    """Decide numerically how F e^{-x} moves when F - F' is a positive measure.

    Solves F - F' = mu with periodic boundary for a handful of smooth mu >= 0
    and reports +1 if F e^{-x} always increases, -1 if it always decreases.
    """
    rng = np.random.default_rng(seed)
    x = grid(n_cells)
    signs = set()
    for _ in range(5):
        a = rng.uniform(0.1, 1.0, size=3)
        phase = rng.uniform(0.0, 2 * np.pi, size=3)
        mu = 1.05 * a.sum() + sum(a[k] * np.cos(2 * np.pi * (k + 1) * x + phase[k]) for k in range(3))
        mu[-1] = mu[0]
        F = resolvent_values(mu, 1.0, True)
        steps = np.diff(F * np.exp(-x))
        if np.all(steps > 0):
            signs.add(1)
        elif np.all(steps < 0):
            signs.add(-1)
        else:
            signs.add(0)
    if len(signs) != 1 or 0 in signs:
        raise RuntimeError(f"oracle inconclusive: {signs}")
    return signs.pop()


def extrapolated_semigroup(gen: GeneratorSpec, t: float, g: ExtrapolatedElement) -> ExtrapolatedElement:
    """T_{-1}(t) g, computed as T(t) on the antiderivative; an attached density is shifted alongside."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    F = apply_semigroup(gen, t, g.antiderivative)
    if g.density is None:
        return ExtrapolatedElement(F, g.representation)
    return ExtrapolatedElement(F, g.representation, g.density.shifted(t))


def extrapolated_resolvent(gen: GeneratorSpec, lam: float, g: ExtrapolatedElement) -> GridFunction:
    """R(lam, A_{-1}) g, an element of E."""
    gen.check_function(g.antiderivative)
    F = g.antiderivative
    RF = resolvent(gen, lam, F)
    if g.representation is Representation.DERIVATIVE_OF_F:
        return lam * RF - F
    return F - (lam - 1.0) * RF


def norm_minus_one(gen: GeneratorSpec, lam: float, g: ExtrapolatedElement) -> float:
    """||g||_{-1} = ||R(lam, A_{-1}) g||_inf."""
    return sup_norm(extrapolated_resolvent(gen, lam, g))


def orbit_integral(gen: GeneratorSpec, tau: float, g: ExtrapolatedElement) -> GridFunction:
    """int_0^tau T_{-1}(s) g ds, which always lands in E.

    Shift case: T(tau) F - F.  Periodic case: int_0^tau T(s) F ds - (T(tau) F - F),
    the first integral by the trapezoid rule on the spatial grid spacing.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    F = g.antiderivative
    moved = apply_semigroup(gen, tau, F) - F
    if g.representation is Representation.DERIVATIVE_OF_F:
        return moved
    steps = max(1, int(math.ceil(tau * F.n_cells)))
    ds = tau / steps
    acc = 0.5 * (F.values + apply_semigroup(gen, tau, F).values)
    for k in range(1, steps):
        acc = acc + apply_semigroup(gen, k * ds, F).values
    acc = ds * acc
    acc[-1] = acc[0]
    return F.with_values(acc) - moved


# -- named directions ---------------------------------------------------------

def constant_direction(n_cells: int, c: float = 1.0, space: SpaceTag = SpaceTag.SHIFT) -> ExtrapolatedElement:
    """Density c on [0, 1]; shift case F(x) = c (x - 1), periodic case F = c."""
    x = grid(n_cells)
    if space is SpaceTag.SHIFT:
        F = GridFunction(space, c * (x - 1.0))
    else:
        F = GridFunction(space, np.full(n_cells + 1, float(c)))
    return ExtrapolatedElement(F, representation_for(space), Density(np.full(n_cells + 1, float(c)), space is SpaceTag.PERIODIC))


def indicator_direction(n_cells: int, a: float, b: float, height: float = 1.0) -> ExtrapolatedElement:
    """height * chi_[a, b] on the shift space with exact antiderivative -height |[x, 1] cap [a, b]|."""
    if not 0.0 <= a < b <= 1.0:
        raise ValueError("need 0 <= a < b <= 1")
    x = grid(n_cells)
    F = -height * np.maximum(0.0, b - np.maximum(x, a))
    F[-1] = 0.0
    dens = height * ((x >= a) & (x <= b))
    return ExtrapolatedElement(GridFunction(SpaceTag.SHIFT, F), Representation.DERIVATIVE_OF_F,
                               Density(dens.astype(float), False))


def sign_step_direction(n_cells: int) -> ExtrapolatedElement:
    """-chi_[0, 1/2) + chi_[1/2, 1]: the derivative of the non-monotone
    g(x) = -x on [0, 1/2), x - 1 on [1/2, 1]."""
    x = grid(n_cells)
    g = np.where(x < 0.5, -x, x - 1.0)
    dens = np.where(x < 0.5, -1.0, 1.0)
    return ExtrapolatedElement(GridFunction(SpaceTag.SHIFT, g), Representation.DERIVATIVE_OF_F, Density(dens, False))


def sign_step_antiderivative(n_cells: int) -> GridFunction:
    x = grid(n_cells)
    return GridFunction(SpaceTag.SHIFT, np.where(x < 0.5, -x, x - 1.0))
