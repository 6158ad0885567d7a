import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_net
from sidewalk_rsp.evalkit import (InsufficientCandidates, KpiReport, KpiRow, SweepConfig,
                                  SweepError, SweepFactor, canonical_method, delay_stats,
                                  emit_report, evaluate, load_report, read_manifest,
                                  select_od_pairs, sensitivity_sweep, SweepBase, tail_mean,
                                  write_manifest)
from sidewalk_rsp.network import OdPair, grid_network
from sidewalk_rsp.scenarios import FreeFlowVector, ScenarioMatrix, kfold_split


def trade_off_instance():
    """Route A (segment 0) is cheaper on average; route B (1, 2) has the smaller maximum."""
    net = make_net([(0, 1), (0, 2), (2, 1)], [2.0, 1.0, 1.0])
    pattern = np.array([[2.0, 1.5, 1.5], [2.0, 1.5, 1.5], [2.0, 1.5, 1.5], [5.0, 1.5, 1.5]])
    D = ScenarioMatrix(np.tile(pattern, (5, 1)))
    return net, D, FreeFlowVector(np.array([1.8, 1.4, 1.4])), OdPair(0, 1)


def test_delay_stats():
    assert delay_stats([0.3]) == (0.3, 0.3, 0.3)
    d = np.arange(40, dtype=float)
    avg, worst, w5 = delay_stats(d)
    assert (avg, worst, w5) == (19.5, 39.0, 38.5)
    assert delay_stats(d, "quantile")[2] == pytest.approx(np.quantile(d, 0.95))
    assert tail_mean(np.arange(10.0)) == 9.0
    with pytest.raises(ValueError):
        delay_stats(d, "median")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-0.5, 5), min_size=1, max_size=60))
def test_stat_ordering(values):
    avg, worst, w5 = delay_stats(values)
    assert worst >= w5 - 1e-12 and w5 >= avg - 1e-12


def test_trade_off_report():
    net, D, ff, od = trade_off_instance()
    rep = evaluate(net, D, ff, {"budgeted": [1]}, [od], folds=5)
    nom, bud = rep.kpi("nominal", 0.0), rep.kpi("budgeted", 1.0)
    paths = {(r.method, r.fold): r.segments for r in rep.paths}
    assert all(paths[("nominal", f)] == (0,) for f in range(5))
    assert all(paths[("budgeted", f)] == (1, 2) for f in range(5))
    assert nom.avg_delay == pytest.approx((2.75 - 1.8) / 1.8)
    assert bud.avg_delay == pytest.approx((3.0 - 1.8) / 1.8)
    assert bud.worst_delay == pytest.approx((3.0 - 1.8) / 1.8)
    assert nom.avg_delay < bud.avg_delay and bud.worst_delay < nom.worst_delay
    assert rep.best("budgeted").parameter == 1.0


def test_worst_delay_rederivable_from_paths():
    net, D, ff, od = trade_off_instance()
    rep = evaluate(net, D, ff, {"budgeted": [1]}, [od], folds=5)
    split = kfold_split(D.n_scenarios, 5, seed=0)
    bench = {r.fold: r.segments for r in rep.paths if r.method == "nominal"}
    worst = []
    for r in rep.paths:
        if r.method != "nominal":
            continue
        T = D.values[split.validation(r.fold)][:, list(r.segments)].sum(axis=1)
        t_ff = ff.values[list(bench[r.fold])].sum()
        worst.append(((T - t_ff) / t_ff).max())
    assert rep.kpi("nominal", 0.0).worst_delay == pytest.approx(np.mean(worst))


def test_singleton_identity():
    net, _, ff, od = trade_off_instance()
    D = ScenarioMatrix(np.tile([[2.0, 1.5, 1.5]], (10, 1)))
    rep = evaluate(net, D, ff, {"budgeted": [1], "ellipsoidal": [2.0]}, [od], folds=5)
    for row in rep.kpis:
        assert row.avg_delay == pytest.approx(row.worst_delay)
        assert row.worst_delay == pytest.approx(row.worst5_delay)
        assert row.avg_delay == pytest.approx(rep.kpis[0].avg_delay)


def test_select_od_pairs():
    net = grid_network(3, 4, seed=0)
    D = np.tile(net.lengths, (6, 1))
    ods = select_od_pairs(net, D, pool_size=20, keep=5, min_segments=2, seed=1)
    assert ods == select_od_pairs(net, D, pool_size=20, keep=5, min_segments=2, seed=1)
    # constant data: every std is 0, so the order is lexicographic
    assert ods == sorted(ods, key=lambda o: (o.origin, o.destination))
    with pytest.raises(InsufficientCandidates):
        select_od_pairs(net, D, pool_size=500, keep=400, min_segments=2)


def test_report_roundtrip_and_empty(tmp_path):
    net, D, ff, od = trade_off_instance()
    rep = evaluate(net, D, ff, {"budgeted": [0, 1], "drsp": [0.1]}, [od], folds=5)
    emit_report(rep, tmp_path / "r")
    assert load_report(tmp_path / "r") == rep
    emit_report(KpiReport(), tmp_path / "e")
    for name in ("kpi.csv", "per_od.csv", "tradeoff.csv", "paths.csv"):
        rows = list(csv.reader(open(tmp_path / "e" / name)))
        assert len(rows) == 1
    one = KpiReport([KpiRow("budgeted", 1.0, 0.1, 0.3, 0.2, 1, 0)])
    emit_report(one, tmp_path / "o")
    assert len(list(csv.reader(open(tmp_path / "o" / "kpi.csv")))) == 2


def test_failed_method_is_nan(monkeypatch):
    from sidewalk_rsp.evalkit import protocol
    from sidewalk_rsp.rsolve import SolverFailure

    def boom(*a, **k):
        raise SolverFailure("no incumbent")

    monkeypatch.setattr(protocol, "solve_ellipsoidal", boom)
    net, D, ff, od = trade_off_instance()
    rep = evaluate(net, D, ff, {"ellipsoidal": [1.0]}, [od], folds=5)
    row = rep.kpi("ellipsoidal", 1.0)
    assert math.isnan(row.avg_delay) and row.n_failed == 1


def test_method_names():
    assert canonical_method("MKL-SVC") == "mkl"
    with pytest.raises(ValueError):
        canonical_method("genetic")


def test_sweep_config_validation():
    cfg = SweepConfig(SweepFactor.ROBOT_SPEED)
    assert cfg.levels == (5.0, 7.5, 10.0)
    with pytest.raises(SweepError):
        SweepConfig("robot_speed", levels=(7.5, 10.0, 12.5))
    with pytest.raises(SweepError):
        SweepConfig("ped_volume", levels=(1.0, 2.0))
    with pytest.raises(SweepError):
        SweepConfig("ped_volume", methods=("budgeted",))


def test_sweep_with_stub_generator(rng):
    net = grid_network(3, 3, seed=0)
    base = np.tile(net.lengths / 1.4, (40, 1))

    def generate(rc):
        scale = rc.demand_multiplier
        noise = rng.gamma(2.0, 0.1 * scale, base.shape)
        return ScenarioMatrix(base * (1 + noise)), FreeFlowVector(net.lengths / 1.4)

    cfg = SweepConfig("ped_volume", grids={"ellipsoidal": [1.0, 4.0], "drsp": [0.1]})
    rows = sensitivity_sweep(cfg, SweepBase(net, n_ods=3, od_pool=10, min_segments=2),
                             generate)
    assert len(rows) == 3 * 2 * 3
    for r in rows:
        assert r.improvement == pytest.approx(r.nominal - r.robust)


def test_manifest(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("x\n")
    write_manifest(tmp_path / "m", "solve", 3, {"k": 1}, inputs=[f])
    m = read_manifest(tmp_path / "m")
    assert m["command"] == "solve" and m["seed"] == "3" and m["setting.k"] == "1"
    assert m["input.a.csv"].startswith("sha256:")
    assert (tmp_path / "m").read_text().splitlines()[-1].startswith("timestamp")
