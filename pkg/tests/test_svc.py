import numpy as np
import pytest
from scipy.optimize import minimize

from sidewalk_rsp.svc import (DegenerateData, GroupingMethod, L1Set, build_wgik, dumps_models,
                              group_dimensions, loads_models, membership, solve_svc_dual,
                              train_mkl, train_svc, tsc_ds, wgik)


@pytest.fixture
def cloud(rng):
    return rng.multivariate_normal([3, 5], [[1, 0.6], [0.6, 2]], size=60)


def test_kernel_gram_is_positive_definite(cloud):
    k = build_wgik(cloud)
    K = k.gram(cloud)
    assert np.linalg.eigvalsh(K).min() > 0
    assert wgik(cloud[0], cloud[0], k) == pytest.approx(k.offset)
    assert wgik(cloud[0], cloud[1], k) == pytest.approx(K[0, 1])


def test_dual_matches_generic_optimizer(cloud):
    K = build_wgik(cloud[:20]).gram(cloud[:20])
    C = 1 / (20 * 0.2)
    res = solve_svc_dual(K, C)
    d = np.diag(K)
    f = lambda a: a @ K @ a - d @ a
    ref = minimize(f, np.full(20, 0.05), jac=lambda a: 2 * K @ a - d, method="SLSQP",
                   bounds=[(0, C)] * 20, constraints={"type": "eq", "fun": lambda a: a.sum() - 1},
                   options={"ftol": 1e-14, "maxiter": 500})
    assert f(res.alpha) <= ref.fun + 1e-8
    with pytest.raises(ValueError):
        solve_svc_dual(K, 0.01)


def test_train_svc_basics(cloud):
    m = train_svc(cloud, 0.2)
    assert m.alpha.sum() == pytest.approx(1, abs=1e-8)
    assert np.all(m.alpha >= -1e-12) and np.all(m.alpha <= 1 / (60 * 0.2) + 1e-12)
    inside = [membership(u, m) for u in cloud]
    assert np.mean(inside) >= 1 - 0.2 - 1e-9
    assert membership(cloud.mean(axis=0), m)
    assert not membership(cloud.mean(axis=0) + 100, m)
    with pytest.raises(DegenerateData):
        train_svc(cloud[:1], 0.2)
    with pytest.raises(ValueError):
        train_svc(cloud, 0.0)


def test_polyhedron_agrees_with_score(cloud, rng):
    m = train_svc(cloud, 0.3)
    s = m.polyhedron()
    for u in rng.normal(size=(20, 2)) * 2 + [3, 5]:
        assert s.value(u) == pytest.approx(m.score(u)[0], rel=1e-12)


def test_vertices_match_support_lp(cloud, rng):
    s = train_svc(cloud, 0.3).polyhedron()
    V = s.vertices()
    assert all(s.contains(v, tol=1e-7) for v in V)
    for x in rng.uniform(0, 2, (10, 2)):
        assert (V @ x).max() == pytest.approx(s.support(x)[0], rel=1e-9)


def test_l1set_square():
    # |u1| + |u2| <= 1 has the four unit vertices
    s = L1Set(np.eye(2), np.zeros(2), np.ones(2), 1.0)
    V = sorted(map(tuple, np.round(s.vertices(), 12)))
    assert V == [(-1, 0), (0, -1), (0, 1), (1, 0)]
    assert s.support(np.array([2.0, 1.0]))[0] == pytest.approx(2)


def test_mkl_model(cloud):
    m = train_mkl(cloud, 0.2, m_kernels=8)
    assert m.weights.sum() == pytest.approx(1) and np.all(m.weights >= -1e-12)
    assert m.alpha.sum() == pytest.approx(1, abs=1e-8)
    s = m.polyhedron()
    u = cloud[3]
    assert s.value(u) == pytest.approx(m.decision_distance(u)[0], rel=1e-10)
    assert membership(cloud.mean(axis=0), m)


def test_grouping(rng):
    base = rng.normal(size=(200, 3))
    # columns 0/3 and 1/4 are near copies, 2 and 5 are noise
    X = np.column_stack([base[:, 0], base[:, 1], rng.normal(size=200),
                         base[:, 0] + 0.01 * rng.normal(size=200),
                         base[:, 1] + 0.01 * rng.normal(size=200), rng.normal(size=200)])
    g = group_dimensions(X, "hierarchical")
    assert g.method is GroupingMethod.HIERARCHICAL
    sets = {frozenset(s) for s in g.subsets}
    assert frozenset({0, 3}) in sets and frozenset({1, 4}) in sets
    r = group_dimensions(rng.normal(size=(10, 7)), "random", seed=1)
    assert sorted(len(s) for s in r.subsets) == [2, 2, 3]
    assert r == group_dimensions(rng.normal(size=(10, 7)), "random", seed=1)


def test_tsc_ds_columns_and_serialization(rng):
    X = rng.normal(size=(80, 4)) + 10
    g = group_dimensions(X, "random", seed=0)
    models = tsc_ds(X, 0.2, g)
    assert [m.columns for m in models] == [tuple(s) for s in g.subsets]
    assert all(m.data.shape[1] == len(m.columns) for m in models)
    back = loads_models(dumps_models(models))
    for a, b in zip(models, back):
        assert np.array_equal(a.alpha, b.alpha) and a.theta == b.theta and a.columns == b.columns
    mk = tsc_ds(X, 0.2, g, learner=train_mkl, m_kernels=4)
    back = loads_models(dumps_models(mk))
    assert np.array_equal(back[0].weights, mk[0].weights)


def test_mkl_weight_patterns(rng):
    iso = rng.normal(size=(120, 2))
    assert train_mkl(iso, 0.2, m_kernels=16).weights.max() < 0.5
    # a weaker ridge on the weights selects fewer kernels
    X = iso @ np.diag([3.0, 0.3])
    dense = train_mkl(X, 0.2, m_kernels=16, mu=1.0)
    sparse = train_mkl(X, 0.2, m_kernels=16, mu=0.01)
    assert sparse.selected_kernels.size < dense.selected_kernels.size
