import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sidewalk_rsp.scenarios import (BadFoldCount, DimensionMismatch, FreeFlowVector,
                                    FreeFlowViolation, NonPositiveFreeFlow, NonPositiveTime,
                                    ParseError, ScenarioMatrix, TooFewScenarios,
                                    correlation_matrix, empirical_moments, kfold_split,
                                    load_scenarios, normalized_delay, unbiased_covariance,
                                    write_freeflow, write_scenarios)


def _write(tmp_path, rows, ff):
    p, q = tmp_path / "s.csv", tmp_path / "f.csv"
    n = len(rows[0])
    head = "day,hour,obstacle_config,direction," + ",".join(f"t_{j}" for j in range(n))
    p.write_text(head + "\n" + "".join(
        "0,10,0,forward," + ",".join(map(str, r)) + "\n" for r in rows))
    q.write_text(",".join(map(str, ff)) + "\n")
    return p, q


def test_load_small(tmp_path):
    D, ff = load_scenarios(*_write(tmp_path, [(10, 20), (12, 22)], (8, 18)))
    assert (D.n_scenarios, D.n_segments) == (2, 2)
    assert ff.values.tolist() == [8, 18]


def test_load_rejects_zero(tmp_path):
    with pytest.raises(NonPositiveTime):
        load_scenarios(*_write(tmp_path, [(10, 0), (12, 22)], (8, 18)))


def test_load_rejects_slow_freeflow(tmp_path):
    with pytest.raises(FreeFlowViolation):
        load_scenarios(*_write(tmp_path, [(10, 20), (12, 22)], (30, 18)))


def test_load_parse_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        load_scenarios(p)
    p.write_text("day,hour,obstacle_config,direction,t_0,t_1\n0,1,0,forward,3\n")
    with pytest.raises(DimensionMismatch):
        load_scenarios(p)


def test_write_roundtrip(tmp_path, rng):
    D = ScenarioMatrix(rng.uniform(1, 5, (4, 3)))
    ff = FreeFlowVector(D.values.min(axis=0))
    write_scenarios(tmp_path / "s.csv", D)
    write_freeflow(tmp_path / "f.csv", ff)
    D2, ff2 = load_scenarios(tmp_path / "s.csv", tmp_path / "f.csv")
    assert np.array_equal(D2.values, D.values) and np.array_equal(ff2.values, ff.values)


def test_moments_by_hand():
    m, S = empirical_moments([[1, 2], [3, 4]])
    assert m.tolist() == [2, 3] and S.tolist() == [[1, 1], [1, 1]]
    m, S = empirical_moments([[0], [2], [4]])
    assert m[0] == 2 and S[0, 0] == pytest.approx(8 / 3)
    _, S = empirical_moments(np.ones((5, 3)))
    assert np.all(S == 0)
    with pytest.raises(TooFewScenarios):
        empirical_moments([[1.0, 2.0]])


def test_moments_double_sum(rng):
    X = rng.normal(size=(5, 4))
    _, S = empirical_moments(X)
    c = X.mean(axis=0)
    ref = sum(np.outer(x - c, x - c) for x in X) / 5
    assert np.allclose(S, ref, atol=1e-12)
    assert np.allclose(unbiased_covariance(X), ref * 5 / 4, atol=1e-12)


def test_correlation_cases(rng):
    a = rng.normal(size=50)
    R = correlation_matrix(np.column_stack([a, a, -a, np.ones(50)]))
    assert R[0, 1] == pytest.approx(1) and R[0, 2] == pytest.approx(-1)
    assert R[0, 3] == 0 and R[3, 3] == 1
    big = rng.normal(size=(10_000, 3))
    off = correlation_matrix(big)[np.triu_indices(3, 1)]
    assert np.all(np.abs(off) < 0.05)
    X = rng.normal(size=(30, 3))
    assert np.allclose(correlation_matrix(X), correlation_matrix(X * [2, 5, 0.1] + [1, -3, 7]))


def test_kfold():
    s = kfold_split(10, 5, seed=1)
    assert s.sizes().tolist() == [2] * 5
    big = kfold_split(2016, 5, seed=0)
    assert {big.training(f).size for f in range(5)} <= {1612, 1613}
    assert np.array_equal(kfold_split(50, 5, 3).assignments, kfold_split(50, 5, 3).assignments)
    with pytest.raises(BadFoldCount):
        kfold_split(3, 5)


@settings(max_examples=30, deadline=None)
@given(st.integers(5, 200), st.integers(2, 5), st.integers(0, 99))
def test_folds_partition(N, k, seed):
    s = kfold_split(N, k, seed)
    sizes = s.sizes()
    assert sizes.max() - sizes.min() <= 1
    idx = np.sort(np.concatenate([s.validation(f) for f in range(k)]))
    assert np.array_equal(idx, np.arange(N))


def test_normalized_delay():
    assert normalized_delay(100, 100) == 0
    assert normalized_delay(150, 100) == 0.5
    assert normalized_delay(90, 100) == pytest.approx(-0.1)
    with pytest.raises(NonPositiveFreeFlow):
        normalized_delay(1, 0)
