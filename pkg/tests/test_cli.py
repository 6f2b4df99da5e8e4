import json
import subprocess
import sys

import pytest

from rcsflock import harness as H
from rcsflock.cli import main


def write_config(tmp_path, spec, name="config.yaml"):
    path = tmp_path / name
    H.dump_config(spec, path)
    return str(path)


def short(spec, t_end):
    d = H.to_dict(spec)
    d["stepper"]["t_end"] = t_end
    return H.from_dict(d)


def test_simulate_writes_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, short(H.default_scenario("pattern"), 1.0))
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "completed"
    for f in ("trajectory.csv", "diagnostics.jsonl", "summary.json"):
        assert (tmp_path / "out" / f).is_file()


def test_check_prints_admissibility(tmp_path, capsys):
    cfg = write_config(tmp_path, H.default_scenario("flocking", seed=3))
    assert main(["check", "--config", cfg]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) == {"r_lower", "r_upper", "collision_avoidance_ok", "flocking_hypotheses_ok", "manifold_wellposed_ok"}
    assert rep["flocking_hypotheses_ok"] is True and rep["manifold_wellposed_ok"] is None


def test_check_on_sphere(tmp_path, capsys):
    cfg = write_config(tmp_path, H.default_scenario("sphere"))
    assert main(["check", "--config", cfg]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert isinstance(rep["manifold_wellposed_ok"], bool)


def test_sweep_command(tmp_path, capsys):
    cfg = write_config(tmp_path, H.build_sweep_scenario())
    out = tmp_path / "sweep"
    assert main(["sweep-c", "--config", cfg, "--c", "10,20,40", "--t-end", "0.5", "--out", str(out)]) == 0
    res = json.loads((out / "sweep.json").read_text())
    assert res["cs"] == [10.0, 20.0, 40.0] and len(res["sup_D"]) == 3
    assert res["sup_D"][0] > res["sup_D"][1] > res["sup_D"][2]


def test_scenario_command(tmp_path, capsys):
    out = tmp_path / "collision"
    assert main(["scenario", "collision", "--out", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["kind"] == "collision"
    # the written config reproduces the scenario
    assert H.load_config(out / "config.yaml") == H.default_scenario("collision")


def test_errors_exit_with_status_2(tmp_path, capsys):
    assert main(["check", "--config", str(tmp_path / "missing.yaml")]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: flocking\nmodel: {c: -1, targets: [[0, 1], [1, 0]]}\n")
    assert main(["check", "--config", str(bad)]) == 2
    bad.write_text("kind: [unclosed\n")
    assert main(["check", "--config", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err


def test_usage_error():
    with pytest.raises(SystemExit):
        main(["scenario", "tornado", "--out", "x"])


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rcsflock", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "sweep-c" in out.stdout
