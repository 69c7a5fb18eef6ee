import csv
import json

import pytest

from amperturb.cli import main
from amperturb.scenarios import (EVOLUTION_HEADER, ConfigError, build_scenario, emit_report, parse_config_text,
                                 report_json, run_scenario)


@pytest.fixture(scope="module")
def counterexample():
    return run_scenario(build_scenario("counterexample-5-3"))


@pytest.fixture(scope="module")
def small_transport():
    return run_scenario(build_scenario("example-5-1", {"n_cells": 200, "dt": 2.5e-3}))


def test_counterexample_verdicts_are_opposite(counterexample):
    pos = counterexample["positivity"]
    assert pos["is_positive_h"] is False
    assert pos["RB_positive_on_basis"] is True
    assert all(c["passed"] for c in counterexample["checks"].values())
    assert set(counterexample["desch"]) >= {"lambda", "K", "spr", "norm_condition_met", "spr_condition_met"}


def test_transport_report(small_transport):
    r = small_transport
    assert r["desch"]["norm_condition_met"] is True
    assert r["checks"]["dp_vs_oracle"]["value"] <= 1e-3
    assert r["evolution"]["table"][0].keys() == set(EVOLUTION_HEADER)


def test_json_round_trip(small_transport):
    text = report_json(small_transport)
    public = {k: v for k, v in small_transport.items() if not k.startswith("_")}
    assert json.loads(text) == public


def test_csv_and_plots_none(tmp_path, small_transport):
    files = emit_report(small_transport, ["json", "csv"], tmp_path)
    assert small_transport["plots"] == "none"
    assert not list(tmp_path.glob("*.svg"))
    with open(tmp_path / "evolution.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == EVOLUTION_HEADER
    assert (tmp_path / "evolution.csv").read_bytes().splitlines()[0] == b"time,probe_x,value,term_index_max,tail_bound"
    assert json.loads((tmp_path / "report.json").read_text())["plots"] == "none"
    assert len(files) == 4


def test_svg_emission(tmp_path, small_transport):
    pytest.importorskip("matplotlib")
    report = dict(small_transport)
    emit_report(report, ["svg"], tmp_path)
    assert sorted(p.name for p in tmp_path.glob("*.svg")) == ["desch_curve.svg", "snapshots.svg"]
    assert report["plots"] == ["snapshots.svg", "desch_curve.svg"]


def test_outputs_are_deterministic(tmp_path):
    args = ["run", "counterexample-5-3", "--n-cells", "200", "--format", "json,csv,svg"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--parallel"]) == 0
    for name in ("report.json", "evolution.csv", "term_norms.csv", "checks.csv", "desch_curve.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# lambda curve point\nscenario = example-5-1\nn_cells = 100  # coarse\nlambda = 2\n")
    s = build_scenario(str(cfg), {"lam": 3.0, "dt": None})
    assert (s.name, s.n_cells, s.lam, s.dt) == ("example-5-1", 100, 3.0, 2.5e-4)


@pytest.mark.parametrize("text", ["n_cells = x\n", "bogus = 1\n", "just words\n", "dt = 0.003\nn_cells = 100\n",
                                  "tol = -1\n", "direction = indicator:0.5\n", "u0 = cos-bump\n"])
def test_malformed_config_exit_2_without_files(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_unknown_target_exit_2(tmp_path):
    assert main(["run", "no-such-scenario", "--out", str(tmp_path / "o")]) == 2
    assert main(["run", "example-5-1", "--format", "xml", "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_divergence_exit_3(tmp_path, capsys):
    cfg = tmp_path / "div.cfg"
    cfg.write_text("direction = constant:3\nn_cells = 200\ndt = 0.0025\n")
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "diverges" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_failing_condition_is_still_success(tmp_path):
    # K = 2 at lambda = 0: the norm condition fails, which is a verdict, not an error
    assert main(["run", "split-demo", "--n-cells", "200", "--dt", "0.0025", "--out", str(tmp_path),
                 "--format", "json"]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["desch"]["norm_condition_met"] is False


def test_antiderivative_file(tmp_path):
    import numpy as np
    n = 100
    x = np.arange(n + 1) / n
    np.savetxt(tmp_path / "F.txt", -0.5 * (1 - x))     # h = 1/2
    cfg = tmp_path / "f.cfg"
    cfg.write_text(f"direction = file:F.txt\nn_cells = {n}\ndt = 0.005\n")
    r = run_scenario(build_scenario(str(cfg)))
    assert r["positivity"]["is_positive_h"] is True
    assert "dp_vs_oracle" not in r["checks"]          # measure data: no density for the oracle
    assert r["evolution"]["positivity_ok"] is True


def test_parse_config_rejects_unknown():
    with pytest.raises(ConfigError):
        parse_config_text("colour = red\n")
