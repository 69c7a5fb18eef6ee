"""Named and custom scenarios, their reports, and report files.

A scenario is a flat set of settings.  The four named ones reproduce the worked
examples (transport with a rank-one source, the periodic rotation, the
counterexample whose resolvent is positive while B is not, and a split
schedule); ``custom`` takes everything from a ``key = value`` file.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dyson_phillips import DPConfig, default_lambda_shift, dp_evolve, dp_evolve_staged
from .extrapolation import (ExtrapolatedElement, PERIODIC_CONE_DIRECTION, constant_direction, embed,
                            extrapolated_resolvent, from_density, indicator_direction, is_positive,
                            periodic_cone_direction_oracle, sign_step_antiderivative, sign_step_direction)
from .lattice import GridFunction, SpaceTag, grid, interp_eval, is_nonnegative, sup_norm
from .oracles import characteristics_solution, volterra_mass
from .perturbations import (ConvergenceError, RankOnePerturbation, SeriesDivergenceError,
                            desch_condition, neumann_series, resolvent_RB, split_schedule)
from .semigroups import apply_semigroup, generator_for, resolvent

SCENARIO_NAMES = ("example-5-1", "periodic-5-2", "counterexample-5-3", "split-demo", "custom")
EVOLUTION_HEADER = ["time", "probe_x", "value", "term_index_max", "tail_bound"]
FORMATS = ("json", "csv", "svg")


class ConfigError(ValueError):
    """Unusable scenario configuration."""


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    space: str = "shift"
    n_cells: int = 1000
    dt: float = 5e-4
    lam: float = 1.0
    lambda_shift: float | None = None
    tol: float = 1e-8
    tau: float = 0.5
    output_times: tuple = (0.0, 0.25, 0.5)
    probes: tuple = (0.0, 0.25, 0.5, 0.75)
    direction: str = "constant:1"
    direction_scale: float = 1.0
    weight: str = "constant:1"
    u0: str = "one-minus-x"
    oracle_dt: float = 1e-4
    seed: int = 0
    formats: tuple = ("json", "csv")
    lambda_sweep: tuple = (0.5, 1.0, 2.0, 4.0, 8.0)

    def validate(self) -> "Scenario":
        if self.name not in SCENARIO_NAMES:
            raise ConfigError(f"unknown scenario {self.name!r}")
        if self.space not in ("shift", "periodic"):
            raise ConfigError(f"space must be shift or periodic, got {self.space!r}")
        if self.n_cells < 2:
            raise ConfigError("n_cells must be at least 2")
        for key in ("dt", "tol", "tau", "oracle_dt"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        ratio = (1.0 / self.n_cells) / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigError(f"dt={self.dt} must divide the grid spacing 1/{self.n_cells}")
        if any(t < 0 or t > self.tau + 1e-12 for t in self.output_times):
            raise ConfigError("output times must lie in [0, tau]")
        if any(not 0.0 <= p <= 1.0 for p in self.probes):
            raise ConfigError("probe points must lie in [0, 1]")
        if any(f not in FORMATS for f in self.formats):
            raise ConfigError(f"formats must be among {FORMATS}")
        if self.space == "periodic" and self.lam <= 0:
            raise ConfigError("the periodic rotation needs lambda > 0")
        if self.lambda_shift is not None and self.lambda_shift <= (0 if self.space == "periodic" else -math.inf):
            raise ConfigError("lambda_shift out of range")
        return self


NAMED = {
    "example-5-1": Scenario(name="example-5-1", n_cells=2000, dt=2.5e-4, lam=1.0, lambda_shift=1.0, tol=1e-8,
                            tau=0.9, output_times=(0.0, 0.25, 0.5, 0.9), direction="constant:1"),
    "periodic-5-2": Scenario(name="periodic-5-2", space="periodic", n_cells=1000, dt=5e-4, lam=2.0,
                             tau=1.0, output_times=(0.0, 0.5, 1.0), direction="cosine:0.5", u0="cos-bump",
                             lambda_sweep=(0.5, 1.0, 2.0, 4.0, 8.0)),
    "counterexample-5-3": Scenario(name="counterexample-5-3", n_cells=1000, dt=1e-3, lam=0.0,
                                   direction="step-5-3", lambda_sweep=(0.0, 0.5, 1.0, 2.0, 4.0)),
    "split-demo": Scenario(name="split-demo", n_cells=400, dt=1.25e-3, lam=0.0, tol=1e-9, tau=0.5,
                           output_times=(0.0, 0.25, 0.5), direction="indicator:0,0.25,8",
                           lambda_sweep=(0.0, 1.0, 2.0, 4.0, 8.0, 16.0)),
    "custom": Scenario(),
}

_FIELD_TYPES = {f.name: f.type for f in fields(Scenario)}


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return None if raw.lower() in ("", "none", "auto") else float(raw)
        if kind == "tuple":
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if key == "formats":
                return tuple(parts)
            return tuple(float(p) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    settings = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = {"scenario": "name", "lambda": "lam"}.get(key, key)
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        settings[key] = _parse_value(key, raw)
    return settings


def build_scenario(target: str, overrides: dict | None = None) -> Scenario:
    """Named scenario or config file, then ``overrides`` (flags > file > defaults)."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if target in NAMED:
        base = NAMED[target]
        file_settings = {}
    else:
        path = Path(target)
        if not path.is_file():
            raise ConfigError(f"{target!r} is neither a scenario name nor a readable config file")
        try:
            file_settings = parse_config_text(path.read_text(encoding="utf-8"))
        except UnicodeDecodeError as exc:
            raise ConfigError(f"{target}: not UTF-8") from exc
        base = NAMED.get(file_settings.get("name", "custom"))
        if base is None:
            raise ConfigError(f"unknown scenario {file_settings.get('name')!r}")
        if "direction" in file_settings and file_settings["direction"].startswith("file:"):
            rel = file_settings["direction"][5:]
            file_settings["direction"] = "file:" + str((path.parent / rel).resolve())
    try:
        scenario = replace(base, **{**file_settings, **overrides})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return scenario.validate()


# -- building blocks ----------------------------------------------------------

def _space(s: Scenario) -> SpaceTag:
    return SpaceTag.SHIFT if s.space == "shift" else SpaceTag.PERIODIC


def make_direction(spec: str, n_cells: int, space: SpaceTag) -> ExtrapolatedElement:
    kind, _, args = spec.partition(":")
    nums = [float(a) for a in args.split(",") if a.strip()] if kind != "file" else []
    if kind == "constant":
        return constant_direction(n_cells, nums[0] if nums else 1.0, space)
    if kind == "indicator" and space is SpaceTag.SHIFT:
        if len(nums) not in (2, 3):
            raise ConfigError("indicator needs a,b[,height]")
        return indicator_direction(n_cells, *nums)
    if kind == "step-5-3" and space is SpaceTag.SHIFT:
        return sign_step_direction(n_cells)
    if kind == "cosine":
        a = nums[0] if nums else 0.5
        return from_density(1.0 + a * np.cos(2 * np.pi * grid(n_cells)), space)
    if kind == "file":
        try:
            values = np.loadtxt(args, dtype=float).ravel()
        except OSError as exc:
            raise ConfigError(f"cannot read antiderivative samples from {args}") from exc
        if values.size != n_cells + 1:
            raise ConfigError(f"{args}: expected {n_cells + 1} samples, got {values.size}")
        try:
            return ExtrapolatedElement.from_antiderivative(GridFunction(space, values))
        except ValueError as exc:
            raise ConfigError(f"{args}: {exc}") from exc
    raise ConfigError(f"unknown direction {spec!r} for the {space.value} space")


def make_u0(spec: str, n_cells: int, space: SpaceTag) -> GridFunction:
    x = grid(n_cells)
    if spec == "one-minus-x" and space is SpaceTag.SHIFT:
        return GridFunction(space, 1.0 - x)
    if spec == "hump" and space is SpaceTag.SHIFT:
        return GridFunction(space, 4.0 * x * (1.0 - x))
    if spec == "cos-bump" and space is SpaceTag.PERIODIC:
        v = 1.0 - np.cos(2 * np.pi * x)
        v[-1] = v[0]
        return GridFunction(space, v)
    if spec == "zero":
        return GridFunction.zeros(n_cells, space)
    raise ConfigError(f"unknown initial state {spec!r} for the {space.value} space")


def make_weight(spec: str, n_cells: int) -> np.ndarray:
    kind, _, args = spec.partition(":")
    if kind == "constant":
        return np.full(n_cells + 1, float(args) if args else 1.0)
    raise ConfigError(f"unknown weight {spec!r}")


def random_positive_functions(n_cells: int, count: int, seed: int, space: SpaceTag = SpaceTag.SHIFT):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = rng.uniform(0.0, 1.0, n_cells + 1)
        if space is SpaceTag.SHIFT:
            v[-1] = 0.0
        else:
            v[-1] = v[0]
        out.append(GridFunction(space, v))
    return out


def _check(value, tolerance, passed, **extra):
    return {"value": value, "tolerance": tolerance, "passed": bool(passed), **extra}


def _desch_dict(rep):
    return {"lambda": rep.lam, "K": rep.K, "spr": rep.spr, "spr_power_iteration": rep.spr_power_iteration,
            "norm_condition_met": rep.norm_condition_met, "spr_condition_met": rep.spr_condition_met}


def _sweep(gen, B, lams, parallel):
    def one(lam):
        r = desch_condition(gen, lam, B, require_positive=False)
        return {"lambda": lam, "K": r.K, "spr": r.spr}
    lams = [lam for lam in lams if lam > gen.spectral_bound]
    if parallel:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(one, lams))
    return [one(lam) for lam in lams]


def _evolution_table(result, probes):
    rows = []
    n_max = len(result.term_norms) - 1
    for t, state, tail in zip(result.times, result.states, result.tail_bound_at_times):
        for p in probes:
            rows.append({"time": float(t), "probe_x": float(p), "value": float(interp_eval(state, p)),
                         "term_index_max": n_max, "tail_bound": float(tail)})
    return rows


# -- runner --------------------------------------------------------------------

def run_scenario(s: Scenario, parallel: bool = False) -> dict:
    """Execute a scenario and collect its report record.

    Mathematical verdicts ("condition fails") are data in the report; only
    numerical breakdowns raise.
    """
    s = s.validate()
    space = _space(s)
    gen = generator_for(space)
    try:
        h = make_direction(s.direction, s.n_cells, space).scaled(s.direction_scale)
        B = RankOnePerturbation(make_weight(s.weight, s.n_cells), h)
        u0 = make_u0(s.u0, s.n_cells, space)
    except ConfigError:
        raise
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad perturbation or initial state: {exc}") from exc
    report = {"scenario": s.name, "version": __version__, "settings": _settings_dict(s),
              "checks": {}, "plots": "none"}
    checks = report["checks"]
    desch = desch_condition(gen, s.lam, B, require_positive=False)
    report["desch"] = _desch_dict(desch)
    report["desch_curve"] = _sweep(gen, B, s.lambda_sweep, parallel)
    Rh = extrapolated_resolvent(gen, s.lam, h)
    basis = random_positive_functions(s.n_cells, 20, s.seed, space)
    report["positivity"] = {
        "is_positive_h": is_positive(h),
        "B_positive": B.is_positive,
        "RB_positive_on_basis": all(is_nonnegative(resolvent_RB(gen, s.lam, B, f)) for f in basis),
    }

    if s.lam > gen.spectral_bound:
        # diverges (exit 3) when spr >= 1: then no resolvent-positive generator exists at this lambda
        neu = neumann_series(gen, s.lam, B, u0, tol=min(s.tol, 1e-10))
        rel = sup_norm(neu.value - neu.closed_form) / max(sup_norm(neu.closed_form), 1e-300)
        report["neumann"] = {"terms": len(neu.term_norms), "tail_bound": neu.tail_bound,
                             "closed_form_rel_error": rel}
        checks["neumann_closed_form"] = _check(rel, 1e-8, rel <= 1e-8)

    if s.name == "counterexample-5-3":
        err = sup_norm(Rh + sign_step_antiderivative(s.n_cells))
        checks["resolvent_equals_minus_g"] = _check(err, 2.0 / s.n_cells, err <= 2.0 / s.n_cells)
        checks["h_not_positive"] = _check(report["positivity"]["is_positive_h"], False,
                                          not report["positivity"]["is_positive_h"])
        checks["RB_positive_on_basis"] = _check(report["positivity"]["RB_positive_on_basis"], True,
                                                report["positivity"]["RB_positive_on_basis"])
        return report

    if s.name == "periodic-5-2":
        _periodic_checks(s, gen, checks)

    if s.name == "split-demo":
        _split_demo(s, gen, B, u0, report)
        return report

    lam_shift = s.lambda_shift if s.lambda_shift is not None else default_lambda_shift(gen, B)
    K_shift = desch_condition(gen, lam_shift, B, require_positive=False).K
    if not K_shift < 1.0:
        raise ConfigError(f"lambda_shift = {lam_shift} gives K = {K_shift:.6g} >= 1")
    cfg = DPConfig(lam_shift, s.tau, s.dt, s.tol)
    result = dp_evolve(gen, B, cfg, u0, list(s.output_times))
    report["evolution"] = {"lambda_shift": lam_shift, "K": result.K, "term_norms": result.term_norms.tolist(),
                           "tail_bound": result.tail_bound, "positivity_ok": result.positivity_ok,
                           "table": _evolution_table(result, s.probes)}
    report["_states"] = [(float(t), st.values.tolist()) for t, st in zip(result.times, result.states)]
    if result.positivity_ok is not None:
        checks["states_positive"] = _check(result.positivity_ok, True, result.positivity_ok)
    if space is SpaceTag.SHIFT and h.density is not None and np.all(B.weight == 1.0):
        sol = volterra_mass(u0, h.density.samples(), s.tau, s.oracle_dt)
        errs = {}
        for t, st in zip(result.times, result.states):
            ref = characteristics_solution(u0, h.density.samples(), sol, float(t))
            errs[repr(float(t))] = sup_norm(ref - st)
        worst = max(errs.values())
        report["oracle"] = {"errors": errs, "max_error": worst}
        checks["dp_vs_oracle"] = _check(worst, 1e-3, worst <= 1e-3)
    if s.name == "example-5-1":
        checks["norm_condition_met"] = _check(desch.norm_condition_met, True, desch.norm_condition_met)
    return report


def _periodic_checks(s, gen, checks):
    n = s.n_cells
    f = make_u0("cos-bump", n, SpaceTag.PERIODIC)
    err_t1 = sup_norm(apply_semigroup(gen, 1.0, f) - f)
    checks["rotation_period_identity"] = _check(err_t1, 0.0, err_t1 == 0.0)
    c = GridFunction(SpaceTag.PERIODIC, np.full(n + 1, 3.0))
    err_c = sup_norm(resolvent(gen, 1.0, c) - c)
    checks["resolvent_fixes_constants"] = _check(err_c, 1e-12, err_c <= 1e-12)
    direction = periodic_cone_direction_oracle()
    checks["cone_direction_oracle"] = _check(direction, PERIODIC_CONE_DIRECTION, direction == PERIODIC_CONE_DIRECTION)
    x = grid(n)
    ok = []
    for k in range(1, 6):
        mu = 1.0 + 0.9 * np.cos(2 * np.pi * k * x + k)
        mu[-1] = mu[0]
        ok.append(is_positive(embed(GridFunction(SpaceTag.PERIODIC, mu))))
    checks["positive_densities_recognized"] = _check(sum(ok), 5, all(ok))


def _split_demo(s, gen, B, u0, report):
    stages = split_schedule(gen, s.lam, B)
    report["split"] = {"n": len(stages), "stage_K": [st.K for st in stages]}
    checks = report["checks"]
    checks["schedule_stages_admissible"] = _check(max(st.K for st in stages), 1.0,
                                                  len(stages) >= 2 and all(st.K < 1.0 for st in stages))
    t_end = max(s.output_times)
    staged = dp_evolve_staged(gen, B, stages, s.lam, DPConfig(s.lam, s.tau, s.dt, s.tol), u0, list(s.output_times))
    lam_single = s.lambda_shift if s.lambda_shift is not None else default_lambda_shift(gen, B)
    single = dp_evolve(gen, B, DPConfig(lam_single, s.tau, s.dt, s.tol, path="measure"), u0, list(s.output_times))
    diff = sup_norm(staged.state_at(t_end) - single.state_at(t_end))
    checks["staged_matches_single"] = _check(diff, 1e-3, diff <= 1e-3)
    report["evolution"] = {"lambda_shift": s.lam, "K": staged.K, "term_norms": staged.term_norms.tolist(),
                           "tail_bound": staged.tail_bound, "positivity_ok": staged.positivity_ok,
                           "single_stage_lambda_shift": lam_single,
                           "table": _evolution_table(staged, s.probes)}
    report["_states"] = [(float(t), st.values.tolist()) for t, st in zip(staged.times, staged.states)]


def _settings_dict(s: Scenario) -> dict:
    d = asdict(s)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


# -- output --------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def report_json(report: dict) -> str:
    public = {k: v for k, v in report.items() if not k.startswith("_")}
    return json.dumps(public, indent=2) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row[h]) for h in header])
    return buf.getvalue()


def emit_report(report: dict, formats, path) -> list[Path]:
    """Write the report files into directory ``path``; returns the files written."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"cannot write to {out}")
    formats = tuple(formats)
    written = []
    if "svg" in formats:
        report["plots"] = _write_svgs(report, out)
        written += [out / p for p in report["plots"]]
    else:
        report["plots"] = "none"
    if "json" in formats:
        p = out / "report.json"
        p.write_text(report_json(report), encoding="utf-8")
        written.append(p)
    if "csv" in formats:
        table = report.get("evolution", {}).get("table", [])
        p = out / "evolution.csv"
        p.write_text(_csv_text(EVOLUTION_HEADER, table), encoding="utf-8", newline="")
        written.append(p)
        norms = report.get("evolution", {}).get("term_norms", [])
        p = out / "term_norms.csv"
        p.write_text(_csv_text(["term_index", "term_norm"],
                               [{"term_index": i, "term_norm": v} for i, v in enumerate(norms)]),
                     encoding="utf-8", newline="")
        written.append(p)
        p = out / "checks.csv"
        rows = [{"check": k, "value": v["value"], "tolerance": v["tolerance"], "passed": v["passed"]}
                for k, v in report["checks"].items()]
        p.write_text(_csv_text(["check", "value", "tolerance", "passed"], rows), encoding="utf-8", newline="")
        written.append(p)
    return written


def _write_svgs(report, out: Path) -> list[str]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "amperturb"
    names = []
    states = report.get("_states")
    if states:
        fig, ax = plt.subplots(figsize=(6, 4))
        for t, values in states:
            ax.plot(grid(len(values) - 1), values, label=f"t = {t:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("u(t, x)")
        ax.legend()
        fig.savefig(out / "snapshots.svg", metadata={"Date": None})
        plt.close(fig)
        names.append("snapshots.svg")
    curve = report.get("desch_curve")
    if curve:
        fig, ax = plt.subplots(figsize=(6, 4))
        lams = [c["lambda"] for c in curve]
        ax.plot(lams, [c["K"] for c in curve], "o-", label="K(lambda)")
        ax.plot(lams, [c["spr"] for c in curve], "s--", label="spr(lambda)")
        ax.axhline(1.0, color="grey", lw=0.8)
        ax.set_xlabel("lambda")
        ax.legend()
        fig.savefig(out / "desch_curve.svg", metadata={"Date": None})
        plt.close(fig)
        names.append("desch_curve.svg")
    return names


EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (SeriesDivergenceError, ConvergenceError, ArithmeticError)
