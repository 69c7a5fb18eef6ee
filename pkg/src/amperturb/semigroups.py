"""The nilpotent left shift and the periodic rotation, with closed-form resolvents."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .lattice import GridFunction, SpaceTag, grid


class GeneratorKind(enum.Enum):
    NILPOTENT_LEFT_SHIFT = "nilpotent-left-shift"
    PERIODIC_ROTATION = "periodic-rotation"


@dataclass(frozen=True)
class GeneratorSpec:
    """Which semigroup is in play.

    ``NILPOTENT_LEFT_SHIFT`` acts on the shift space (Af = f', f(1) = f'(1) = 0,
    spectral bound -inf); ``PERIODIC_ROTATION`` on the periodic space
    (spectral bound 0).
    """

    kind: GeneratorKind

    @property
    def spectral_bound(self) -> float:
        return -math.inf if self.kind is GeneratorKind.NILPOTENT_LEFT_SHIFT else 0.0

    @property
    def space(self) -> SpaceTag:
        return SpaceTag.SHIFT if self.kind is GeneratorKind.NILPOTENT_LEFT_SHIFT else SpaceTag.PERIODIC

    @property
    def periodic(self) -> bool:
        return self.kind is GeneratorKind.PERIODIC_ROTATION

    def check_function(self, f: GridFunction):
        if f.space_tag is not self.space:
            raise ValueError(f"{self.kind.value} acts on the {self.space.value} space, got {f.space_tag.value}")

    def check_lambda(self, lam: float):
        if not math.isfinite(lam):
            raise ValueError(f"lambda must be finite, got {lam}")
        if lam <= self.spectral_bound:
            raise ValueError(f"lambda={lam} is not above the spectral bound {self.spectral_bound} of {self.kind.value}")


SHIFT = GeneratorSpec(GeneratorKind.NILPOTENT_LEFT_SHIFT)
ROTATION = GeneratorSpec(GeneratorKind.PERIODIC_ROTATION)


def generator_for(space: SpaceTag) -> GeneratorSpec:
    return SHIFT if space is SpaceTag.SHIFT else ROTATION


def shift_values(values: np.ndarray, t: float, periodic: bool) -> np.ndarray:
    """Nodal values of x -> v(x + t) (cut off beyond 1, or taken mod 1).

    Shifts by whole grid cells are done by index arithmetic and are exact;
    everything else interpolates linearly.
    """
    n = values.size - 1
    steps = t * n
    k = round(steps)
    if abs(steps - k) <= 1e-9 * max(1.0, steps):
        if periodic:
            idx = (np.arange(n + 1) + k) % n
            return values[idx]
        out = np.zeros_like(values)
        if k <= n:
            out[: n + 1 - k] = values[k:]
        return out
    x = grid(n) + t
    if periodic:
        return np.interp(np.mod(x, 1.0), grid(n), values)
    # v(1) = 0, so clipping to 1 realizes the cut-off exactly
    return np.interp(np.minimum(x, 1.0), grid(n), values)


def apply_semigroup(gen: GeneratorSpec, t: float, f: GridFunction) -> GridFunction:
    """T(t)f for the left shift, (T(t)f)(x) = f(x + t) if x + t <= 1 else 0, or the rotation."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    gen.check_function(f)
    return f.with_values(shift_values(f.values, t, gen.periodic))


def _cell_weights(a: float):
    """phi1 = int_0^1 e^{-a s} ds and phi2 = int_0^1 s e^{-a s} ds, stable for small |a|."""
    if abs(a) < 0.1:
        terms = [(-a) ** k / math.factorial(k) for k in range(16)]
        phi1 = sum(c / (k + 1) for k, c in enumerate(terms))
        phi2 = sum(c / (k + 2) for k, c in enumerate(terms))
        return phi1, phi2
    em = -math.expm1(-a)
    return em / a, (em - a * math.exp(-a)) / (a * a)


def resolvent_values(values: np.ndarray, lam: float, periodic: bool) -> np.ndarray:
    """u(x) = int_x^1 e^{lam (x - s)} f(s) ds, or its periodic counterpart.

    ``f`` is the piecewise-linear interpolant of ``values``; the kernel is
    integrated against it exactly cell by cell, and the cells are chained by
    the recursion u_i = e^{-lam dx} u_{i+1} + (local integral), which never
    forms e^{lam x} on its own.
    """
    n = values.size - 1
    dx = 1.0 / n
    phi1, phi2 = _cell_weights(lam * dx)
    q = math.exp(-lam * dx)
    local = dx * ((phi1 - phi2) * values[:-1] + phi2 * values[1:])
    v = np.empty(n + 1)
    v[n] = 0.0
    v[:n] = lfilter([1.0], [1.0, -q], local[::-1])[::-1]
    if not periodic:
        return v
    # u = v + e^{-lam (1 - x)} u(1) with u(0) = u(1)
    u_end = v[0] / -math.expm1(-lam)
    u = v + np.exp(-lam * (1.0 - grid(n))) * u_end
    u[n] = u[0]
    return u


def resolvent(gen: GeneratorSpec, lam: float, f: GridFunction) -> GridFunction:
    """R(lam, A) f from the closed-form kernel integral.

    Left shift: (R f)(x) = int_x^1 e^{lam (x - s)} f(s) ds, any real lam.
    Rotation:   (R f)(x) = (1 - e^{-lam})^{-1} int_0^1 e^{-lam s} f((x + s) mod 1) ds, lam > 0.
    """
    gen.check_function(f)
    gen.check_lambda(lam)
    return f.with_values(resolvent_values(f.values, lam, gen.periodic))


def resolvent_norm(gen: GeneratorSpec, lam: float) -> float:
    """Operator norm of R(lam, A), i.e. the sup of R(lam, A) applied to the constant 1."""
    gen.check_lambda(lam)
    if gen.periodic:
        return 1.0 / lam
    return _cell_weights(lam)[0]


def laplace_resolvent_oracle(gen: GeneratorSpec, lam: float, f: GridFunction,
                             t_max: float, dt: float) -> GridFunction:
    """Trapezoid-in-time approximation of int_0^t_max e^{-lam t} T(t) f dt.

    For the left shift the integrand vanishes for t >= 1, so t_max = 1 is exact.
    """
    gen.check_function(f)
    gen.check_lambda(lam)
    if dt <= 0 or t_max <= 0:
        raise ValueError("t_max and dt must be positive")
    n_steps = max(1, int(round(t_max / dt)))
    h = t_max / n_steps
    acc = np.zeros_like(f.values)
    for k in range(n_steps + 1):
        t = k * h
        weight = 0.5 * h if k in (0, n_steps) else h
        acc += weight * math.exp(-lam * t) * shift_values(f.values, t, gen.periodic)
    if gen.periodic:
        acc[-1] = acc[0]
    return f.with_values(acc)
