import csv

import pytest

from sidewalk_rsp.cli import main


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "sim.cfg").write_text("sim.seed = 3\nscenarios.days = 0,5\nscenarios.hours = 12,17\n"
                               "obstacles.fractions = 0,0.5\n")
    assert main(["make-network", "--grid", "3x3", "--seed", "1", "--out", str(d / "net.csv")]) == 0
    assert main(["simulate", "--network", str(d / "net.csv"), "--config", str(d / "sim.cfg"),
                 "--jobs", "1", "--out", str(d / "data")]) == 0
    return d


def _common(d):
    return ["--network", str(d / "net.csv"), "--scenarios", str(d / "data" / "scenarios.csv"),
            "--freeflow", str(d / "data" / "freeflow.csv"), "--jobs", "1"]


def test_simulate_outputs(workspace):
    rows = list(csv.reader(open(workspace / "data" / "scenarios.csv")))
    assert rows[0][:4] == ["day", "hour", "obstacle_config", "direction"]
    assert len(rows) == 1 + 2 * 2 * 2 * 2
    assert (workspace / "data" / "run.manifest").exists()


def test_solve_methods(workspace, tmp_path):
    for extra in (["--method", "budgeted", "--gamma", "2"], ["--method", "drsp", "--epsilon", "0.1"],
                  ["--method", "ellipsoidal", "--lambda", "3"], ["--method", "nominal"]):
        out = tmp_path / "sol.csv"
        assert main(["solve", *_common(workspace), "--od", "0:8", "--out", str(out),
                     *extra]) == 0
        rows = list(csv.reader(open(out)))
        assert rows[0][0] == "method" and rows[1][0] == extra[1]
        assert rows[1][-1]


def test_build_sets_then_solve(workspace, tmp_path):
    sets = tmp_path / "svc.txt"
    assert main(["build-sets", "--scenarios", str(workspace / "data" / "scenarios.csv"),
                 "--freeflow", str(workspace / "data" / "freeflow.csv"), "--method", "svc",
                 "--nu", "0.3", "--out", str(sets)]) == 0
    out = tmp_path / "sol.csv"
    assert main(["solve", *_common(workspace), "--method", "svc", "--sets", str(sets),
                 "--od", "0:8", "--out", str(out)]) == 0


def test_exit_codes(workspace, tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    assert main(["solve", "--network", str(tmp_path / "nope.csv"), "--scenarios", "a",
                 "--freeflow", "b", "--method", "nominal", "--od", "0:1", "--out", out]) == 2
    assert main(["solve", *_common(workspace), "--method", "tabu", "--od", "0:8",
                 "--out", out]) == 2
    assert main(["solve", *_common(workspace), "--method", "budgeted", "--gamma", "-1",
                 "--od", "0:8", "--out", out]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("robot.flight = yes\n")
    assert main(["simulate", "--network", str(workspace / "net.csv"), "--config", str(bad),
                 "--out", str(tmp_path / "d")]) == 2
    assert main(["solve", *_common(workspace), "--method", "drsp", "--od", "0:8",
                 "--out", out]) == 2
    assert "error" in capsys.readouterr().err


def test_evaluate_is_byte_identical(workspace, tmp_path):
    args = ["evaluate", *_common(workspace), "--methods", "budgeted,ellipsoidal",
            "--gammas", "1,2", "--lambdas", "1,4", "--ods", "3", "--pool", "10",
            "--min-segments", "2", "--folds", "2"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    for name in ("kpi.csv", "per_od.csv", "tradeoff.csv", "paths.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    kpi = list(csv.DictReader(open(tmp_path / "a" / "kpi.csv")))
    assert {r["method"] for r in kpi} == {"nominal", "budgeted", "ellipsoidal"}
