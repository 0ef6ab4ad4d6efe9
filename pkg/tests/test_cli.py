"""End-to-end tests of the command-line interface."""

import json
import sys
import textwrap

import numpy as np
import pytest

from stlsurrogate.cli import main


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "spec.stl").write_text(
        "# stay below threshold\nalw[0,3] (a <= 0.5)\n"
    )
    (tmp_path / "good.csv").write_text(
        "# dt=1.0\na\n0.1\n0.2\n0.1\n0.0\n"
    )
    (tmp_path / "bad.csv").write_text(
        "# dt=1.0\na\n0.1\n0.9\n0.1\n0.0\n"
    )
    (tmp_path / "dom.json").write_text(
        json.dumps(
            {
                "dimensions": [
                    {"name": "mass", "unit": "g", "dist": "uniform",
                     "lo": 20, "hi": 70}
                ]
            }
        )
    )
    return tmp_path


def test_monitor_satisfied(workdir, capsys):
    code = main(
        ["monitor", "--formula", str(workdir / "spec.stl"),
         "--trace", str(workdir / "good.csv")]
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "satisfied" in out
    assert "robustness" in out


def test_monitor_violated(workdir, capsys):
    code = main(
        ["monitor", "--formula", str(workdir / "spec.stl"),
         "--trace", str(workdir / "bad.csv")]
    )
    assert code == 1
    assert "violated" in capsys.readouterr().out


def test_monitor_error_exit_2(workdir, capsys):
    (workdir / "broken.stl").write_text("alw[0,3] (a <= )\n")
    code = main(
        ["monitor", "--formula", str(workdir / "broken.stl"),
         "--trace", str(workdir / "good.csv")]
    )
    assert code == 2


def test_monitor_horizon_error(workdir, capsys):
    (workdir / "long.stl").write_text("alw[0,30] (a <= 0.5)\n")
    code = main(
        ["monitor", "--formula", str(workdir / "long.stl"),
         "--trace", str(workdir / "good.csv")]
    )
    assert code == 2


def test_design_glp_stdout(workdir, capsys):
    code = main(["design", "--domain", str(workdir / "dom.json"), "--n", "5"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "mass"
    vals = sorted(float(v) for v in lines[1:])
    np.testing.assert_allclose(vals, [25, 35, 45, 55, 65])


def test_design_to_file(workdir):
    out = workdir / "design.csv"
    code = main(
        ["design", "--domain", str(workdir / "dom.json"), "--n", "4",
         "--method", "random", "--seed", "7", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 5


def test_campaign_builtin_and_field(workdir, capsys):
    rec_path = workdir / "rec.json"
    csv_path = workdir / "iters.csv"
    code = main(
        ["campaign", "--scenario", "pick_mass", "--budget", "3",
         "--n-init", "8", "--pool-size", "32", "--seed", "1",
         "--out", str(rec_path), "--csv", str(csv_path)]
    )
    assert code == 0
    doc = json.loads(rec_path.read_text())
    assert doc["config"]["strategy"] == "mepe"
    assert len(doc["history"]) == 11
    assert csv_path.exists()

    field_path = workdir / "field.csv"
    code = main(
        ["field", "--campaign", str(rec_path), "--resolution", "9",
         "--out", str(field_path)]
    )
    assert code == 0
    lines = field_path.read_text().strip().splitlines()
    assert lines[0] == "mass,mean,variance"
    assert len(lines) == 10


def test_bench_verb(workdir, capsys):
    out_dir = workdir / "bench"
    cfg = {
        "scenario": "pick_mass",
        "strategies": ["ud"],
        "budgets": [4],
        "n_init": 6,
        "pool_size": 32,
        "test_points": 20,
        "seeds": 1,
        "random_reps": 1,
    }
    cfg_path = workdir / "bench.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main(["bench", "--config", str(cfg_path), "--out", str(out_dir)])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert "ud-4" in report["cells"]
    assert (out_dir / "rmse.csv").exists()


def test_bench_flag_overrides(workdir):
    out_dir = workdir / "bench2"
    code = main(
        ["bench", "--scenario", "pick_mass", "--strategy", "random",
         "--budget", "3", "--seeds", "1", "--random-reps", "2",
         "--test-points", "15", "--n-init", "5", "--pool-size", "16",
         "--out", str(out_dir)]
    )
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert list(report["cells"]) == ["random-3"]
    assert report["config"]["random_reps"] == 2


def test_bench_missing_scenario_is_config_error(workdir, capsys):
    code = main(["bench", "--out", str(workdir / "nope")])
    assert code == 2


def test_protocol_check_ok(workdir, capsys):
    stub = workdir / "stub.py"
    stub.write_text(
        textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"v": 1}), flush=True)
            for line in sys.stdin:
                req = json.loads(line)
                print(json.dumps({"id": req["id"], "dt": 0.5,
                                  "channels": {"a": [1.0, 2.0]}}), flush=True)
            """
        )
    )
    code = main(
        ["protocol-check", "--cmd", f"{sys.executable} {stub}",
         "--domain", str(workdir / "dom.json"), "--timeout", "15"]
    )
    assert code == 0
    assert "protocol ok" in capsys.readouterr().out


def test_protocol_check_bad_reply_exit_3(workdir, capsys):
    stub = workdir / "bad_stub.py"
    stub.write_text(
        textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"v": 1}), flush=True)
            sys.stdin.readline()
            print("not json at all", flush=True)
            """
        )
    )
    code = main(
        ["protocol-check", "--cmd", f"{sys.executable} {stub}",
         "--probe", "42", "--timeout", "15"]
    )
    assert code == 3


def test_external_blackbox_campaign(workdir):
    # full campaign loop against an external process
    stub = workdir / "sim.py"
    stub.write_text(
        textwrap.dedent(
            """
            import json, sys
            print(json.dumps({"v": 1}), flush=True)
            for line in sys.stdin:
                req = json.loads(line)
                m = req["x"][0]
                val = 0.2 if m < 45 else 0.8
                print(json.dumps({"id": req["id"], "dt": 1.0,
                                  "channels": {"a": [val] * 4}}), flush=True)
            """
        )
    )
    spec = workdir / "ext.stl"
    spec.write_text("alw[0,3] (a <= 0.5)\n")
    rec_path = workdir / "ext_rec.json"
    code = main(
        ["campaign", "--formula", str(spec), "--domain", str(workdir / "dom.json"),
         "--blackbox", f"external:{sys.executable} {stub}",
         "--budget", "2", "--n-init", "6", "--pool-size", "16",
         "--seed", "2", "--out", str(rec_path)]
    )
    assert code == 0
    doc = json.loads(rec_path.read_text())
    ys = [h["y"] for h in doc["history"]]
    assert any(y > 0 for y in ys) and any(y < 0 for y in ys)
