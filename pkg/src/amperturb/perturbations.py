"""Rank-one perturbations B f = <w, f> h from E into E_{-1}.

Everything here rests on one factorization: R(lam, A_{-1}) B f is the scalar
<w, f> times the fixed function R(lam, A_{-1}) h in E.  Hence

    ||R(lam, A_{-1}) B||    = ||w||_1 * ||R(lam, A_{-1}) h||_inf
    spr(R(lam, A_{-1}) B)   = |<w, R(lam, A_{-1}) h>|

and the Neumann series for (lam - A_{-1} - B)^{-1} is geometric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .extrapolation import (ExtrapolatedElement, extrapolated_resolvent, is_positive)
from .lattice import GridFunction, SpaceTag, grid, sup_norm, trapezoid_weights
from .semigroups import GeneratorSpec, resolvent


class SeriesDivergenceError(ArithmeticError):
    """A Neumann or Dyson-Phillips series blew up.

    ``term_norms`` holds the sup norms computed before giving up.
    """

    def __init__(self, msg, term_norms=()):
        super().__init__(msg)
        self.term_norms = list(term_norms)


class ConvergenceError(RuntimeError):
    """A series did not reach its tolerance within the allowed number of terms."""

    def __init__(self, msg, term_norms=()):
        super().__init__(msg)
        self.term_norms = list(term_norms)


@dataclass(frozen=True, eq=False)
class RankOnePerturbation:
    """B f = (int_0^1 w f dx) h.

    ``weight`` holds nodal samples of w.  It carries no boundary condition:
    the natural choice w = 1 is not itself an element of the shift space.
    """

    weight: np.ndarray
    direction: ExtrapolatedElement

    def __post_init__(self):
        w = np.array(self.weight, dtype=float)
        if w.shape != (self.direction.n_cells + 1,):
            raise ValueError(f"weight needs {self.direction.n_cells + 1} samples, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weight", w)

    @classmethod
    def with_unit_weight(cls, h: ExtrapolatedElement) -> "RankOnePerturbation":
        return cls(np.ones(h.n_cells + 1), h)

    @classmethod
    def zero(cls, n_cells: int, space: SpaceTag = SpaceTag.SHIFT) -> "RankOnePerturbation":
        return cls(np.ones(n_cells + 1), ExtrapolatedElement.zero(n_cells, space))

    @property
    def n_cells(self) -> int:
        return self.direction.n_cells

    @property
    def space(self) -> SpaceTag:
        return self.direction.space

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.weight >= 0.0)) and is_positive(self.direction)

    @property
    def weight_l1(self) -> float:
        return float(trapezoid_weights(self.n_cells) @ np.abs(self.weight))

    def functional(self, f: GridFunction) -> float:
        """<w, f> by the trapezoid rule."""
        if f.n_cells != self.n_cells or f.space_tag is not self.space:
            raise ValueError("function does not live on the perturbation's grid/space")
        return float(trapezoid_weights(self.n_cells) @ (self.weight * f.values))

    def scaled(self, s: float) -> "RankOnePerturbation":
        return RankOnePerturbation(self.weight, self.direction.scaled(s))


def apply_perturbation(B: RankOnePerturbation, f: GridFunction) -> ExtrapolatedElement:
    return B.direction.scaled(B.functional(f))


def direction_resolvent(gen: GeneratorSpec, lam: float, B: RankOnePerturbation) -> GridFunction:
    """R(lam, A_{-1}) h."""
    return extrapolated_resolvent(gen, lam, B.direction)


def resolvent_RB(gen: GeneratorSpec, lam: float, B: RankOnePerturbation, f: GridFunction) -> GridFunction:
    """R(lam, A_{-1}) B f = <w, f> R(lam, A_{-1}) h."""
    return B.functional(f) * direction_resolvent(gen, lam, B)


@dataclass(frozen=True)
class DeschReport:
    lam: float
    K: float
    spr: float
    norm_condition_met: bool
    spr_condition_met: bool
    spr_power_iteration: float = math.nan

    def __post_init__(self):
        if self.spr > self.K * (1 + 1e-9) + 1e-15:
            raise ArithmeticError(f"spectral radius {self.spr} exceeds the norm {self.K}")


def power_iteration_spr(gen: GeneratorSpec, lam: float, B: RankOnePerturbation,
                        max_iter: int = 200, rtol: float = 1e-12) -> float:
    """Spectral radius of f -> R(lam, A_{-1}) B f by power iteration from 1 - x."""
    Rh = direction_resolvent(gen, lam, B)
    v = GridFunction(B.space, 1.0 - grid(B.n_cells)) if B.space is SpaceTag.SHIFT \
        else GridFunction(B.space, np.ones(B.n_cells + 1))
    estimate = 0.0
    for _ in range(max_iter):
        nv = sup_norm(v)
        if nv == 0.0:
            return 0.0
        Mv = B.functional(v) * Rh
        new = sup_norm(Mv) / nv
        v = Mv / sup_norm(Mv) if sup_norm(Mv) > 0 else Mv
        if abs(new - estimate) <= rtol * max(new, 1e-300):
            return new
        estimate = new
    return estimate


def desch_condition(gen: GeneratorSpec, lam: float, B: RankOnePerturbation,
                    require_positive: bool = True) -> DeschReport:
    """K = ||R(lam, A_{-1}) B|| and spr(R(lam, A_{-1}) B) for a rank-one B.

    The norm of f -> <w, f> over the unit ball is taken as ||w||_1 (the
    supremum is approached by functions pinned to zero near x = 1).
    """
    gen.check_lambda(lam)
    if require_positive and not B.is_positive:
        raise ValueError("B is not a positive operator")
    Rh = direction_resolvent(gen, lam, B)
    K = B.weight_l1 * sup_norm(Rh)
    spr = abs(B.functional(Rh))
    spr_pi = power_iteration_spr(gen, lam, B)
    return DeschReport(lam, K, spr, K < 1.0, spr < 1.0, spr_pi)


@dataclass
class NeumannResult:
    value: GridFunction
    term_norms: list = field(default_factory=list)
    tail_bound: float = 0.0
    spr: float = 0.0
    closed_form: GridFunction | None = None


def neumann_series(gen: GeneratorSpec, lam: float, B: RankOnePerturbation,
                   f: GridFunction | ExtrapolatedElement, tol: float = 1e-10,
                   max_terms: int = 10_000, blowup: float = 1e6) -> NeumannResult:
    """(lam - A_{-1} - B)^{-1} f = sum_n (R(lam, A_{-1}) B)^n R(lam, A_{-1}) f.

    ``f`` may be an element of E or of E_{-1}; the first term is then
    R(lam, A) f or R(lam, A_{-1}) f.  Stops once a term's sup norm drops below
    ``tol``; raises :class:`SeriesDivergenceError` when a term exceeds
    ``blowup`` times the first one and :class:`ConvergenceError` after
    ``max_terms`` terms.
    """
    if isinstance(f, ExtrapolatedElement):
        u0 = extrapolated_resolvent(gen, lam, f)
    else:
        u0 = resolvent(gen, lam, f)
    Rh = direction_resolvent(gen, lam, B)
    sigma = B.functional(Rh)
    spr = abs(sigma)
    first = sup_norm(u0)
    total = u0
    term = u0
    norms = [first]
    closed = None
    if sigma != 1.0:
        closed = u0 + (B.functional(u0) / (1.0 - sigma)) * Rh
    if first == 0.0:
        return NeumannResult(total, norms, 0.0, spr, closed)
    for _ in range(max_terms):
        term = B.functional(term) * Rh
        nt = sup_norm(term)
        norms.append(nt)
        total = total + term
        if nt > blowup * first:
            raise SeriesDivergenceError(
                f"Neumann series diverges at lambda={lam}: spr = {spr:.6g}", norms)
        if nt < tol:
            tail = nt * spr / (1.0 - spr) if spr < 1.0 else math.inf
            return NeumannResult(total, norms, tail, spr, closed)
    raise ConvergenceError(f"Neumann series not converged after {max_terms} terms (spr = {spr:.6g})", norms)


def perturbed_resolvent(gen: GeneratorSpec, lam: float, B: RankOnePerturbation,
                        f: GridFunction | ExtrapolatedElement, tol: float = 1e-10,
                        max_terms: int = 10_000) -> GridFunction:
    """(lam - A_{-1} - B)^{-1} f by the Neumann series."""
    return neumann_series(gen, lam, B, f, tol, max_terms).value


class SplitStage(NamedTuple):
    index: int
    perturbation: RankOnePerturbation   # B / n
    K: float                            # ||(lam - A_{-1} - (j/n) B)^{-1} (1/n) B||
    base_scale: float                   # j / n


def split_schedule(gen: GeneratorSpec, lam: float, B: RankOnePerturbation,
                   tol: float = 1e-12) -> list[SplitStage]:
    """Cut B into n equal pieces such that each piece is a Desch perturbation
    of the generator A_{-1} + (j/n) B built so far.

    n = 1 if ||R(lam, A_{-1}) B|| < 1 already, else
    n = 1 + floor(||(lam - A_{-1} - B)^{-1} B||).
    """
    report = desch_condition(gen, lam, B, require_positive=False)
    if report.spr >= 1.0:
        raise SeriesDivergenceError(f"spr = {report.spr:.6g} >= 1: no schedule exists")
    if report.K < 1.0:
        return [SplitStage(0, B, report.K, 0.0)]
    full = neumann_series(gen, lam, B, B.direction, tol=tol).value
    n = 1 + int(math.floor(B.weight_l1 * sup_norm(full)))
    stages = []
    for j in range(n):
        partial = neumann_series(gen, lam, B.scaled(j / n), B.direction, tol=tol).value
        K_j = B.weight_l1 * sup_norm(partial) / n
        if not K_j < 1.0:
            raise ArithmeticError(f"stage {j} has K = {K_j:.6g} >= 1")
        stages.append(SplitStage(j, B.scaled(1.0 / n), K_j, j / n))
    return stages
