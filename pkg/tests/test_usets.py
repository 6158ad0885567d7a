import numpy as np
import pytest

from sidewalk_rsp.scenarios import FreeFlowVector, TooFewScenarios
from sidewalk_rsp.usets import (BadAlpha, BadEpsilon, BadGamma, build_budgeted, build_ellipsoid,
                                build_wasserstein, dumps_set, loads_set)


def test_budgeted_by_hand():
    s = build_budgeted([[1, 5], [3, 2]], 1)
    assert s.c_lo.tolist() == [1, 2] and s.d.tolist() == [2, 3]
    assert s.worst_case([1, 1]) == 6
    assert build_budgeted([[1, 5], [3, 2]], 0).worst_case([1, 1]) == 3
    assert build_budgeted([[1, 5], [3, 2]], 2).worst_case([1, 1]) == 8
    assert s.contains([3, 2]) and not s.contains([3, 5])
    for bad in (-1, 3, 1.5):
        with pytest.raises(BadGamma):
            build_budgeted([[1, 5], [3, 2]], bad)


def test_ellipsoid(rng):
    X = rng.normal(size=(50, 3)) + 5
    e = build_ellipsoid(X, 4.0)
    x = np.array([1.0, 0.0, 1.0])
    assert e.worst_case(x) == pytest.approx(e.center @ x + 2 * np.sqrt(x @ e.shape @ x))
    assert build_ellipsoid(X, 0.0).worst_case(x) == pytest.approx(e.center @ x)
    assert e.contains(e.center)
    # a constant column still gives a positive definite shape
    Xc = X.copy()
    Xc[:, 1] = 2.0
    assert np.all(np.linalg.eigvalsh(build_ellipsoid(Xc, 1).shape) > 0)
    with pytest.raises(TooFewScenarios):
        build_ellipsoid(X[:1], 1)


def test_wasserstein(rng):
    X = rng.uniform(2, 4, (30, 2))
    ff = FreeFlowVector(np.array([1.5, 1.5]))
    a = build_wasserstein(X, ff, 0.1, 0.3, n_samples=10, seed=4)
    assert a.n_samples == 10 and a.support_hi.tolist() == X.max(axis=0).tolist()
    assert np.array_equal(a.samples, build_wasserstein(X, ff, 0.1, 0.3, 10, seed=4).samples)
    assert build_wasserstein(X, ff, 0.1, 0.3, n_samples=None).n_samples == 30
    with pytest.raises(BadAlpha):
        build_wasserstein(X, ff, 0.1, 0.0)
    with pytest.raises(BadEpsilon):
        build_wasserstein(X, ff, -0.1, 0.3)


def test_serialization_roundtrip(rng):
    X = rng.uniform(2, 4, (20, 3))
    for s in (build_budgeted(X, 2), build_ellipsoid(X, 3.0),
              build_wasserstein(X, X.min(axis=0), 0.2, 0.5, n_samples=None)):
        back = loads_set(dumps_set(s))
        assert type(back) is type(s)
        for k, v in vars(s).items():
            assert np.array_equal(np.asarray(getattr(back, k)), np.asarray(v))
