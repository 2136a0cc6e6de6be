import json
import math

import numpy as np
import pytest

from fracsolve import suites
from fracsolve.cli import RunConfig, main, read_csv
from fracsolve.errors import InputValidationError
from fracsolve.suites import Check

RL_EXAMPLE = {
    "kind": "rl",
    "alpha": 0.25,
    "lambda": 0.1,
    "T": 1.0,
    "N": 1.0,
    "f": "1",
    "h": "0",
    "c1": 1.0,
    "c2": 1.0,
    "Lf": 0.0,
    "grid": {"n": 256, "gamma": 2.0},
    "tol": 1e-10,
    "max_iter": 200,
    "out": {"csv": "u.csv", "report": "report.json"},
}

DIVERGENT = dict(RL_EXAMPLE, f="exp(4*u)", c1=1.0, c2=2.0, Lf=5.0, **{"lambda": 5.0})


def write(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def test_run_rl_example(tmp_path, capsys):
    assert main(["run", str(write(tmp_path, RL_EXAMPLE))]) == 0
    rows = (tmp_path / "u.csv").read_text().splitlines()
    assert rows[0] == "t,u"
    t, u = (float(x) for x in rows[-1].split(","))
    assert t == 1.0 and u == pytest.approx(0.112838, abs=1e-6)
    report = json.loads((tmp_path / "report.json").read_text())
    for key in ("converged", "iterations", "contraction_factor", "residual", "threshold", "bound",
                "bound_satisfied", "wall_time_ms"):
        assert key in report
    assert report["converged"] is True and report["bound_satisfied"] is True
    assert report["threshold"] is None  # Lf = 0: any lambda admissible
    assert "converged=True" in capsys.readouterr().out


def test_csv_has_seventeen_digits(tmp_path):
    main(["run", str(write(tmp_path, RL_EXAMPLE))])
    g = read_csv(tmp_path / "u.csv")
    t = g.nodes
    np.testing.assert_allclose(g.values, 0.1 * t**0.5 / math.gamma(1.5), rtol=1e-10, atol=1e-16)
    line = (tmp_path / "u.csv").read_text().splitlines()[2]
    assert line == f"{t[1]:.17g},{g.values[1]:.17g}"


def test_determinism(tmp_path):
    path = write(tmp_path, RL_EXAMPLE)
    main(["run", str(path)])
    first_csv = (tmp_path / "u.csv").read_bytes()
    first = json.loads((tmp_path / "report.json").read_text())
    main(["run", str(path)])
    assert (tmp_path / "u.csv").read_bytes() == first_csv
    second = json.loads((tmp_path / "report.json").read_text())
    first.pop("wall_time_ms")
    second.pop("wall_time_ms")
    assert first == second


def test_dump_spec_round_trip(tmp_path):
    cfg = {k: v for k, v in RL_EXAMPLE.items() if k not in ("grid", "N", "h")}
    dumped = tmp_path / "dumped.json"
    assert main(["run", str(write(tmp_path, cfg)), "--dump-spec", str(dumped)]) == 0
    again = RunConfig.load(dumped)
    assert again == RunConfig.load(tmp_path / "config.json")
    assert again.grid_gamma == 2.0  # default max(1, 1/(2 alpha))
    assert again.to_dict() == json.loads(dumped.read_text())


@pytest.mark.parametrize(
    "extra",
    [
        {"kind": "caputo", "u0": 1.0, "M": 1.0, "b": 1.0, "omega": 2.0, "f": "1 + exp(-u)", "c2": 2.0, "Lf": 1.0,
         "lambda": 1e-3, "T": 0.5, "continuations": 1},
        {"kind": "ts", "timescale": [[0.0, 0.5], [1.0, 1.0]], "f": "1 + 1/(1+u^2)", "c2": 2.0, "Lf": 0.65},
        {"kind": "abel2", "f": "1 + t", "k": "t*s", "alpha": 0.5, "T": 1.0},
        {"kind": "abel1", "f": "t^0.5", "alpha": 0.5, "T": 1.0},
        {"kind": "op", "apply": "Ialpha", "g": "1 + t", "alpha": 0.5, "T": 1.0},
    ],
)
def test_run_other_kinds(tmp_path, extra):
    base = {k: v for k, v in RL_EXAMPLE.items() if k in ("alpha", "lambda", "c1", "c2", "Lf", "f", "tol", "grid", "out")}
    cfg = dict(base, **extra)
    fields = {"abel1": ("alpha", "T", "f"), "abel2": ("alpha", "T", "f", "k"), "op": ("apply", "alpha", "T", "g")}
    if cfg["kind"] in fields:
        cfg = {k: v for k, v in cfg.items() if k in fields[cfg["kind"]] + ("kind", "tol", "grid", "out")}
    assert main(["run", str(write(tmp_path, cfg))]) == 0
    assert (tmp_path / "u.csv").exists()
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["kind"] == cfg["kind"]


def test_divergent_instance_exits_2(tmp_path):
    assert main(["run", str(write(tmp_path, DIVERGENT))]) == 2
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["converged"] is False
    assert len(report["differences"]) >= 1


def test_hypothesis_violation_exits_3(tmp_path):
    # 1 + 1/(1+u^2) reaches 2 at u = 0, above the asserted c2
    cfg = dict(RL_EXAMPLE, f="1 + 1/(1+u^2)", c2=1.5, Lf=0.65)
    assert main(["run", str(write(tmp_path, cfg))]) == 3
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["converged"] is True and report["warnings"]


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        json.dumps([1, 2]),
        json.dumps(dict(RL_EXAMPLE, kind="heat")),
        json.dumps(dict(RL_EXAMPLE, extra=1)),
        json.dumps({k: v for k, v in RL_EXAMPLE.items() if k != "alpha"}),
        json.dumps(dict(RL_EXAMPLE, f="1 + x")),
        json.dumps(dict(RL_EXAMPLE, alpha="0.25")),
        json.dumps(dict(RL_EXAMPLE, alpha=0.75)),
        json.dumps(dict(RL_EXAMPLE, tol=0)),
        json.dumps(dict(RL_EXAMPLE, grid={"n": 1})),
        json.dumps(dict(RL_EXAMPLE, grid={"n": 16, "gamma": 0.5})),
        json.dumps(dict(RL_EXAMPLE, f="1/u")),
    ],
)
def test_input_errors_exit_1(tmp_path, text, capsys):
    path = tmp_path / "bad.json"
    path.write_text(text, encoding="utf-8")
    assert main(["run", str(path)]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"kind": "rl",\n  "alpha": }', encoding="utf-8")
    assert main(["run", str(path)]) == 1
    assert "line 2, column" in capsys.readouterr().err


def test_missing_config_and_usage_errors(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 1
    assert main([]) == 1
    assert main(["frobnicate"]) == 1


def test_output_paths_relative_to_config(tmp_path, monkeypatch):
    sub = tmp_path / "case"
    sub.mkdir()
    monkeypatch.chdir(tmp_path)
    cfg = dict(RL_EXAMPLE, out={"csv": "sol.csv", "report": "rep.json"})
    assert main(["run", str(write(sub, cfg))]) == 0
    assert (sub / "sol.csv").exists() and (sub / "rep.json").exists()
    assert not (tmp_path / "sol.csv").exists()


def test_verify_suites(capsys):
    assert main(["verify", "timescale"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert main(["verify", "nonsense"]) == 1


def test_verify_failure_exits_4(monkeypatch, capsys):
    monkeypatch.setitem(suites.SUITES, "broken", lambda: [Check("always fails", False, "by construction")])
    assert main(["verify", "broken"]) == 4
    assert "FAIL" in capsys.readouterr().out


def test_op_command(tmp_path):
    t = np.linspace(0.0, 1.0, 257)
    src = tmp_path / "g.csv"
    src.write_text("t,u\n" + "\n".join(f"{x:.17g},{1 + x:.17g}" for x in t) + "\n")
    out = tmp_path / "out.csv"
    assert main(["op", "--apply", "Ialpha", "--alpha", "0.5", "--in", str(src), "--out", str(out)]) == 0
    res = read_csv(out)
    assert res.values[-1] == pytest.approx(1 / math.gamma(1.5) + 1 / math.gamma(2.5), rel=1e-12)
    assert main(["op", "--apply", "Zalpha", "--alpha", "0.5", "--in", str(src), "--out", str(out)]) == 1
    assert main(["op", "--apply", "Dalpha", "--alpha", "1.5", "--in", str(src), "--out", str(out)]) == 1
    src.write_text("t,u\n0,1\n1\n")
    assert main(["op", "--apply", "Ialpha", "--alpha", "0.5", "--in", str(src), "--out", str(out)]) == 1


def test_threshold_command(tmp_path, capsys):
    cfg = dict(RL_EXAMPLE, Lf=1.0)
    assert main(["threshold", str(write(tmp_path, cfg))]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["lambda_star"] == pytest.approx(1 / (1 + 2 * math.e), rel=1e-12)
    assert result["best_lambda_star"] >= result["lambda_star"]
    ts = {k: v for k, v in cfg.items() if k not in ("T", "N", "h")}
    ts.update(kind="ts", timescale=[[0.0, 1.0]])
    assert main(["threshold", str(write(tmp_path, ts))]) == 0
    assert json.loads(capsys.readouterr().out)["lambda_star"] == pytest.approx(math.gamma(1.5) / 3, rel=1e-12)
    op = {"kind": "op", "apply": "Ialpha", "alpha": 0.5, "g": "t"}
    assert main(["threshold", str(write(tmp_path, op))]) == 1


def test_config_rejects_non_object():
    with pytest.raises(InputValidationError):
        RunConfig.from_dict([])
