"""Dyson-Phillips construction of the perturbed semigroup.

    S(t) = sum_n S_n(t),   S_0(t) = T(t),
    S_n(t) f = int_0^t T_{-1}(t - s) B S_{n-1}(s) f ds,

run on the rescaled semigroup e^{-lam t} T(t) and multiplied back at the end.

For a rank-one B the only information a term passes to the next one is the
scalar history m_n(s) = <w, S_n(s) u0>, so each term is

    S_n(t) = int_0^t m_{n-1}(s) e^{-lam (t-s)} T_{-1}(t - s) h ds.

For the shift and the rotation, T_{-1}(r) h evaluated at x is a fixed profile
evaluated at x + r.  Along the characteristic variable y = x + t the integral
is a running sum in t, so a whole term costs O(n_steps * n_cells).  Time
steps must divide the grid spacing so that every x + t - s is a node of a
refined profile grid.

Two ways to apply T_{-1}(r) h:

* ``density``: trapezoid rule on m(s) h(x + t - s), cut off exactly where the
  characteristic leaves [0, 1];
* ``measure``: integration by parts onto the antiderivative F,
  int m(s) d(T(t-s) F) ds = m(0) T(t) F - m(t) F + int m'(s) T(t-s) F ds
  (plus a lam-term from the rescaling), which never touches a density.

Split schedules are run stage by stage.  The base semigroup of a later
stage is itself a Dyson-Phillips sum; its extrapolated action on h is
realized through h = (lam - C_{-1}) G with G = (lam - C_{-1})^{-1} h in E.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

from .extrapolation import Representation
from .lattice import GridFunction, SpaceTag, grid, positivity_tolerance, sup_norm, trapezoid_weights
from .perturbations import (ConvergenceError, RankOnePerturbation, SeriesDivergenceError,
                            SplitStage, desch_condition, neumann_series)
from .semigroups import GeneratorSpec

#: target norm for the automatic choice of the rescaling parameter
DEFAULT_K_TARGET = 0.7


@dataclass(frozen=True)
class DPConfig:
    lambda_shift: float
    tau: float
    dt: float
    tol_tail: float = 1e-8
    max_terms: int = 500
    path: str = "auto"

    def __post_init__(self):
        if not self.dt > 0 or not self.tau > 0:
            raise ValueError("dt and tau must be positive")
        if not self.tol_tail > 0:
            raise ValueError("tol_tail must be positive")
        if self.path not in ("auto", "density", "measure"):
            raise ValueError(f"unknown path {self.path!r}")


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: list
    term_norms: np.ndarray          # per term: sup over the time grid of ||S_n(t) u0|| (rescaled)
    term_norms_at_times: np.ndarray  # shape (n_terms, len(times))
    term_minima: np.ndarray         # per term: smallest nodal value over the time grid
    tail_bound: float
    tail_bound_at_times: np.ndarray
    positivity_ok: bool | None
    K: float
    lambda_shift: float
    stages: int = 1
    extra: dict = field(default_factory=dict)

    def state_at(self, t: float) -> GridFunction:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise KeyError(f"no state stored at t={t}")
        return self.states[k]


class _TimeGrid:
    def __init__(self, tau: float, dt: float, n_cells: int):
        self.n_steps = int(math.ceil(tau / dt - 1e-9))
        self.dt = dt
        self.n_cells = n_cells
        ratio = (1.0 / n_cells) / dt
        self.ratio = int(round(ratio))
        if self.ratio < 1 or abs(ratio - self.ratio) > 1e-9 * ratio:
            raise ValueError(f"dt={dt} must divide the grid spacing 1/{n_cells}")
        self.Z = n_cells * self.ratio   # profile-grid index of x = 1

    @property
    def times(self):
        return self.dt * np.arange(self.n_steps + 1)

    def index(self, t: float) -> int:
        k = int(round(t / self.dt))
        if abs(k * self.dt - t) > 1e-9 * max(1.0, t) or k < 0 or k > self.n_steps:
            raise ValueError(f"time {t} is not on the grid of step {self.dt} up to {self.n_steps * self.dt}")
        return k

    def refine(self, values: np.ndarray) -> np.ndarray:
        """Piecewise-linear profile on the grid z_q = q dt, q = 0..Z."""
        z = np.arange(self.Z + 1) / self.Z
        return np.interp(z, grid(self.n_cells), values)


class _TransportBase:
    """Rescaled left shift / rotation acting on the time grid, by characteristics."""

    def __init__(self, gen: GeneratorSpec, direction, lam: float, tg: _TimeGrid, path: str):
        self.gen = gen
        self.periodic = gen.periodic
        self.h = direction
        self.lam = lam
        self.tg = tg
        self.decay = math.exp(-lam * tg.dt)
        if path == "auto":
            path = "density" if direction.density is not None else "measure"
        if path == "density" and direction.density is None:
            raise ValueError("density path requested but the direction has no density")
        self.path = path
        if path == "density":
            self.profile = tg.refine(direction.density.samples())
        else:
            self.profile = tg.refine(direction.antiderivative.values)
            self.F = direction.antiderivative.values
        self._pair = self._interval_arrays(self.profile)

    # -- index helpers --------------------------------------------------------
    def _rows_index(self, k: int) -> np.ndarray:
        idx = k + self.tg.ratio * np.arange(self.tg.n_cells + 1)
        return idx % self.tg.Z if self.periodic else idx

    def _interval_arrays(self, prof: np.ndarray):
        """Left/right endpoint values for the interval [z_q, z_{q+1}] of the profile.

        Shift case: intervals reaching past z = 1 contribute nothing, so the
        cut-off of a discontinuous density is exact.
        """
        tg = self.tg
        Z = tg.Z
        if self.periodic:
            per = prof[:Z]
            return per, np.roll(per, -1)
        size = tg.n_steps + Z + 1
        a = np.zeros(tg.n_steps + size)
        b = np.zeros(tg.n_steps + size)
        off = tg.n_steps
        a[off: off + Z] = prof[:Z]
        b[off: off + Z] = prof[1: Z + 1]
        return a, b

    def _shifted_pair(self, k: int):
        a, b = self._pair
        if self.periodic:
            return np.roll(a, k), np.roll(b, k)
        off = self.tg.n_steps
        size = self.tg.n_steps + self.tg.Z + 1
        return a[off - k: off - k + size], b[off - k: off - k + size]

    # -- actions ----------------------------------------------------------------
    def free_rows(self, values: np.ndarray):
        """Rows e^{-lam t_k} T(t_k) v, k = 0..n_steps."""
        tg = self.tg
        prof = tg.refine(values)
        if self.periodic:
            prof = prof[: tg.Z]
        else:
            prof = np.concatenate([prof, np.zeros(tg.n_steps)])
        for k in range(tg.n_steps + 1):
            yield math.exp(-self.lam * k * tg.dt) * prof[self._rows_index(k)]

    def _conv_rows(self, coeff: np.ndarray):
        """Rows int_0^{t_k} coeff(s) e^{-lam (t_k - s)} P(x + t_k - s) ds for the stored profile P."""
        tg = self.tg
        psi = np.zeros(tg.Z if self.periodic else tg.n_steps + tg.Z + 1)
        half = 0.5 * tg.dt
        yield psi[self._rows_index(0)]
        for k in range(1, tg.n_steps + 1):
            a, b = self._shifted_pair(k)
            psi *= self.decay
            psi += half * (self.decay * coeff[k - 1] * b + coeff[k] * a)
            yield psi[self._rows_index(k)]

    def forced_rows(self, mu: np.ndarray):
        """Rows int_0^{t_k} mu(s) e^{-lam (t_k - s)} T_{-1}(t_k - s) h ds."""
        if self.path == "density":
            yield from self._conv_rows(mu)
            return
        # h = alpha F + beta dF
        alpha, beta = (0.0, 1.0) if self.h.representation is Representation.DERIVATIVE_OF_F else (1.0, -1.0)
        dmu = np.gradient(mu, self.tg.dt, edge_order=2) if mu.size > 2 else np.zeros_like(mu)
        coeff = alpha * mu + beta * (dmu + self.lam * mu)
        conv = self._conv_rows(coeff)
        free = self.free_rows(self.F)
        for k, (c_row, f_row) in enumerate(zip(conv, free)):
            yield c_row + beta * (mu[0] * f_row - mu[k] * self.F)


class _StageBase:
    """Rescaled semigroup generated by A + (j/n) B, itself a Dyson-Phillips sum over the previous stage."""

    def __init__(self, prev, scale: float, weights: np.ndarray, G: np.ndarray,
                 tol: float, max_terms: int):
        self.prev = prev
        self.scale = scale
        self.weights = weights
        self.G = G
        self.tg = prev.tg
        self.tol = tol
        self.max_terms = max_terms
        self._orbits = {}

    def orbit(self, values: np.ndarray) -> np.ndarray:
        key = values.tobytes()
        if key not in self._orbits:
            run = _run_series(self.prev, values, self.scale, self.weights, [], self.tol,
                              self.max_terms, keep_orbit=True)
            self._orbits[key] = run.orbit
        return self._orbits[key]

    def free_rows(self, values: np.ndarray):
        yield from self.orbit(values)

    def forced_rows(self, mu: np.ndarray):
        # h = (lam - C_{-1}) G  =>  int mu(s) S_{-1}(t-s) h ds
        #   = mu(t) G - mu(0) S(t) G - int mu'(s) S(t-s) G ds
        orb = self.orbit(self.G)
        dt = self.tg.dt
        dmu = np.gradient(mu, dt, edge_order=2) if mu.size > 2 else np.zeros_like(mu)
        full = fftconvolve(dmu[:, None], orb, axes=0)[: mu.size]
        conv = dt * (full - 0.5 * dmu[0] * orb - 0.5 * dmu[:, None] * orb[0][None, :])
        for k in range(mu.size):
            yield mu[k] * self.G - mu[0] * orb[k] - conv[k]


@dataclass
class _SeriesRun:
    snapshots: dict
    term_norms: list
    term_norms_at: list
    term_minima: list
    orbit: np.ndarray | None


def _run_series(base, u0: np.ndarray, scale: float, weights: np.ndarray, out_idx,
                tol: float, max_terms: int, keep_orbit: bool = False, blowup: float = 1e6) -> _SeriesRun:
    tg = base.tg
    n_t = tg.n_steps + 1
    snapshots = {k: np.zeros(tg.n_cells + 1) for k in out_idx}
    orbit = np.zeros((n_t, tg.n_cells + 1)) if keep_orbit else None
    norms, norms_at, minima = [], [], []
    rows = base.free_rows(u0)
    n = 0
    while True:
        m = np.empty(n_t)
        sup = np.empty(n_t)
        lowest = math.inf
        for k, row in enumerate(rows):
            m[k] = weights @ row
            sup[k] = np.max(np.abs(row))
            lowest = min(lowest, float(row.min()))
            if k in snapshots:
                snapshots[k] += row
            if keep_orbit:
                orbit[k] += row
        term_sup = float(sup.max())
        norms.append(term_sup)
        norms_at.append([sup[k] for k in out_idx])
        minima.append(lowest)
        if term_sup < tol:
            break
        if n > 0 and term_sup > blowup * max(norms[0], 1e-300):
            raise SeriesDivergenceError("Dyson-Phillips terms blow up", norms)
        n += 1
        if n >= max_terms:
            raise ConvergenceError(f"Dyson-Phillips series not converged after {max_terms} terms", norms)
        rows = base.forced_rows(scale * m)
    return _SeriesRun(snapshots, norms, norms_at, minima, orbit)


def default_lambda_shift(gen: GeneratorSpec, B: RankOnePerturbation, target: float = DEFAULT_K_TARGET) -> float:
    """Smallest lam in {1/2, 1, 2, 4, ...} with ||R(lam, A_{-1}) B|| <= target."""
    lam = 0.5
    while lam < 2.0 ** 30:
        if desch_condition(gen, lam, B, require_positive=False).K <= target:
            return lam
        lam *= 2.0
    raise ValueError("no admissible rescaling found")


def dp_tail_bound(K: float, term_norms, u0_norm: float | None = None, margin: float = 0.1) -> float:
    """(last term norm) K / (1 - K).

    With ``u0_norm`` the geometric envelope ||S_n|| <= K^n ||u0|| is checked
    with a relative ``margin``; a violation raises ``ArithmeticError``.
    """
    if not K < 1.0:
        raise ValueError(f"K = {K} >= 1: no geometric tail bound")
    norms = np.asarray(term_norms, dtype=float)
    if norms.size == 0:
        raise ValueError("no terms computed")
    if u0_norm is not None:
        envelope = (1.0 + margin) * K ** np.arange(norms.size) * u0_norm + 1e-14
        bad = np.nonzero(norms > envelope)[0]
        if bad.size:
            n = int(bad[0])
            raise ArithmeticError(f"term {n} has norm {norms[n]:.6g} above the envelope {envelope[n]:.6g}")
    return float(norms[-1] * K / (1.0 - K))


def _weights(B: RankOnePerturbation) -> np.ndarray:
    return trapezoid_weights(B.n_cells) * B.weight


def _check_inputs(gen, B, u0):
    gen.check_function(u0)
    if u0.n_cells != B.n_cells or B.space is not u0.space_tag:
        raise ValueError("u0 and B live on different grids/spaces")


class DysonPhillips:
    """Memoizing evaluator of single Dyson-Phillips terms for one (gen, B, cfg)."""

    def __init__(self, gen: GeneratorSpec, B: RankOnePerturbation, cfg: DPConfig):
        self.gen = gen
        self.B = B
        self.cfg = cfg
        self.tg = _TimeGrid(cfg.tau, cfg.dt, B.n_cells)
        self.base = _TransportBase(gen, B.direction, cfg.lambda_shift, self.tg, cfg.path)
        self.weights = _weights(B)
        self._m = {}

    def _scalar_history(self, n: int, u0: GridFunction) -> np.ndarray:
        key = (n, u0.values.tobytes())
        if key not in self._m:
            rows = self.base.free_rows(u0.values) if n == 0 else \
                self.base.forced_rows(self._scalar_history(n - 1, u0))
            self._m[key] = np.array([self.weights @ row for row in rows])
        return self._m[key]

    def term(self, n: int, t: float, u0: GridFunction) -> GridFunction:
        """Rescaled S_n(t) u0."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        _check_inputs(self.gen, self.B, u0)
        k = self.tg.index(t)
        rows = self.base.free_rows(u0.values) if n == 0 else \
            self.base.forced_rows(self._scalar_history(n - 1, u0))
        for i, row in enumerate(rows):
            if i == k:
                return u0.with_values(_close(row, u0))
        raise AssertionError("unreachable")


def _close(values: np.ndarray, like: GridFunction) -> np.ndarray:
    # rows are computed exactly on the boundary node up to the last rounding
    values = np.array(values, dtype=float)
    if like.space_tag is SpaceTag.SHIFT:
        values[-1] = 0.0
    else:
        values[-1] = values[0]
    return values


def dp_term(gen: GeneratorSpec, B: RankOnePerturbation, cfg: DPConfig, n: int, t: float,
            u0: GridFunction) -> GridFunction:
    """The rescaled n-th Dyson-Phillips term e^{-lam t} S_n(t) u0."""
    return DysonPhillips(gen, B, cfg).term(n, t, u0)


def _package(times, snapshots, out_idx, run: _SeriesRun, lam, K, u0, B, stages=1):
    states = []
    for t, k in zip(times, out_idx):
        states.append(u0.with_values(_close(math.exp(lam * t) * snapshots[k], u0)))
    states[0] = u0 if times[0] == 0.0 else states[0]
    norms = np.array(run.term_norms)
    at = np.array(run.term_norms_at).reshape(len(norms), len(out_idx))
    tail = dp_tail_bound(K, norms) if K < 1.0 else math.inf
    tail_at = at[-1] * K / (1.0 - K) if K < 1.0 else np.full(len(out_idx), math.inf)
    positivity = None
    if B.is_positive and np.all(u0.values >= 0.0):
        eps = positivity_tolerance(u0)
        positivity = all(bool(np.all(s.values >= -eps)) for s in states)
    return EvolutionResult(np.asarray(times, dtype=float), states, norms, at, np.array(run.term_minima),
                           tail, tail_at, positivity, K, lam, stages)


def dp_evolve(gen: GeneratorSpec, B: RankOnePerturbation, cfg: DPConfig, u0: GridFunction,
              output_times) -> EvolutionResult:
    """S(t) u0 at ``output_times`` from the truncated Dyson-Phillips series.

    Refuses when the rescaled Desch constant K = ||R(lambda_shift, A_{-1}) B||
    is not below 1; use :func:`split_schedule` and :func:`dp_evolve_staged`.
    """
    _check_inputs(gen, B, u0)
    K = desch_condition(gen, cfg.lambda_shift, B, require_positive=False).K
    if not K < 1.0:
        raise ValueError(f"K = {K:.6g} >= 1 at lambda_shift = {cfg.lambda_shift}; "
                         "pick a larger lambda_shift or evolve along a split schedule")
    engine = DysonPhillips(gen, B, cfg)
    tg = engine.tg
    times = np.asarray(output_times, dtype=float)
    out_idx = [tg.index(t) for t in times]
    run = _run_series(engine.base, u0.values, 1.0, engine.weights, out_idx,
                      cfg.tol_tail, cfg.max_terms)
    return _package(times, run.snapshots, out_idx, run, cfg.lambda_shift, K, u0, B)


def dp_evolve_staged(gen: GeneratorSpec, B: RankOnePerturbation, stages: list[SplitStage], lam: float,
                     cfg: DPConfig, u0: GridFunction, output_times) -> EvolutionResult:
    """Evolve along a split schedule: stage j + 1 perturbs the semigroup of A + (j/n) B by B / n.

    ``lam`` is the parameter the schedule was computed at; it replaces
    ``cfg.lambda_shift`` as the rescaling of every stage.
    """
    _check_inputs(gen, B, u0)
    # the stage bases G_j are exact antiderivative solves, so the transport base
    # must use the same exact measure path (nodal densities smooth steps)
    cfg = replace(cfg, lambda_shift=lam, path="measure" if cfg.path == "auto" else cfg.path)
    n = len(stages)
    tg = _TimeGrid(cfg.tau, cfg.dt, B.n_cells)
    weights = _weights(B)
    base = _TransportBase(gen, B.direction, lam, tg, cfg.path)
    for j in range(1, n):
        G = neumann_series(gen, lam, B.scaled(j / n), B.direction).value.values
        base = _StageBase(base, 1.0 / n, weights, G, cfg.tol_tail, cfg.max_terms)
    times = np.asarray(output_times, dtype=float)
    out_idx = [tg.index(t) for t in times]
    run = _run_series(base, u0.values, 1.0 / n, weights, out_idx, cfg.tol_tail, cfg.max_terms)
    K_last = stages[-1].K
    res = _package(times, run.snapshots, out_idx, run, lam, K_last, u0, B, stages=n)
    res.extra["stage_K"] = [s.K for s in stages]
    return res
