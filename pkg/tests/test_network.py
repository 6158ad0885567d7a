import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_net
from sidewalk_rsp.network import (ExplosionGuard, NegativeCost, Network, NetworkError, OdPair,
                                  Path, Segment, SegmentKind, Unreachable, enumerate_paths,
                                  flow_constraints, grid_network, path_from_flow, random_network,
                                  shortest_path)


def test_single_edge():
    net = make_net([(0, 1)], [3.0])
    path, cost = shortest_path(net, [3.0], OdPair(0, 1))
    assert path.segments == (0,) and cost == 3.0


def test_triangle_prefers_two_hops():
    net = make_net([(0, 1), (1, 2), (0, 2)])
    path, cost = shortest_path(net, [1.0, 1.0, 3.0], OdPair(0, 2))
    assert path.segments == (0, 1) and cost == 2.0


def test_zero_cost_tie_goes_to_smallest_node(diamond):
    net, od = diamond
    path, cost = shortest_path(net, np.zeros(4), od)
    assert cost == 0.0
    assert net.path_nodes(path) == [0, 1, 3]


def test_errors(diamond):
    net, od = diamond
    with pytest.raises(NegativeCost):
        shortest_path(net, [1, -1, 1, 1], od)
    with pytest.raises(Unreachable):
        shortest_path(net, np.ones(4), OdPair(3, 0))
    with pytest.raises(NetworkError):
        Segment(0, 1, 1, 2.0)
    with pytest.raises(NetworkError):
        Segment(0, 1, 2, 0.0)
    with pytest.raises(NetworkError):
        Network([Segment(1, 0, 1, 1.0)])


def test_enumerate(diamond):
    net, od = diamond
    assert [p.segments for p in enumerate_paths(net, od, 5)] == [(0, 2), (1, 3)]
    assert enumerate_paths(net, od, 0) == []
    assert len(enumerate_paths(make_net([(0, 1)]), OdPair(0, 1), 1)) == 1
    with pytest.raises(ExplosionGuard):
        enumerate_paths(net, od, 5, cap=1)


def test_flow_constraints(diamond):
    net, od = diamond
    fc = flow_constraints(net, od)
    assert fc.A_eq.shape == (4, 4)
    assert list(fc.b_eq) == [1, 0, 0, -1]
    x = Path.from_segments((1, 3), 4).incidence
    assert np.allclose(fc.A_eq @ x, fc.b_eq)
    single = flow_constraints(make_net([(0, 1)]), OdPair(0, 1))
    assert single.A_eq.tolist() == [[1.0], [-1.0]]
    iso = Network([Segment(0, 0, 1, 1.0)], nodes=[0, 1, 2])
    assert np.all(flow_constraints(iso, OdPair(0, 1)).A_eq[2] == 0)


def test_flow_path_roundtrip(diamond):
    net, od = diamond
    for p in enumerate_paths(net, od, 4):
        assert path_from_flow(net, p.incidence, od).segments == p.segments


def test_parallel_segments_allowed():
    net = make_net([(0, 1), (0, 1)], [2.0, 1.0])
    path, cost = shortest_path(net, net.lengths, OdPair(0, 1))
    assert path.segments == (1,) and cost == 1.0


def test_csv_roundtrip(tmp_path):
    net = grid_network(3, 3, seed=2)
    net.to_csv(tmp_path / "n.csv")
    back = Network.from_csv(tmp_path / "n.csv")
    assert back.segments == net.segments
    with pytest.raises(FileNotFoundError):
        Network.from_csv(tmp_path / "missing.csv")


def test_grid_network_link_budget():
    net = grid_network(5, 6, n_links=40, seed=3)
    assert len(net.nodes) == 30 and net.n == 80
    kinds = {s.kind for s in net.segments}
    assert kinds == {SegmentKind.SIDEWALK, SegmentKind.CROSSING}
    # every node still reaches every other one
    for d in (1, 17, 29):
        shortest_path(net, net.lengths, OdPair(0, d))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 100))
def test_shortest_path_matches_enumeration_and_scales(seed, k):
    rng = np.random.default_rng(seed)
    net, od = random_network(rng, n_nodes=int(rng.integers(3, 8)),
                             n_segments=int(rng.integers(4, 13)))
    costs = rng.uniform(0, 10, net.n)
    path, cost = shortest_path(net, costs, od)
    best = min(p.cost(costs) for p in enumerate_paths(net, od, net.n))
    assert cost == pytest.approx(best, rel=1e-12, abs=1e-12)
    assert net.is_path(path, od)
    _, scaled = shortest_path(net, k * costs, od)
    assert scaled == pytest.approx(k * cost, rel=1e-9)
