"""Directed sidewalk graph, path representation and nominal shortest paths."""

from __future__ import annotations

import csv
import enum
import heapq
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np


class NetworkError(ValueError):
    pass


class Unreachable(NetworkError):
    pass


class NegativeCost(NetworkError):
    pass


class ExplosionGuard(RuntimeError):
    pass


class SegmentKind(str, enum.Enum):
    SIDEWALK = "sidewalk"
    CROSSING = "crossing"


@dataclass(frozen=True)
class Segment:
    id: int
    tail: int
    head: int
    length: float
    kind: SegmentKind = SegmentKind.SIDEWALK

    def __post_init__(self):
        if self.tail == self.head:
            raise NetworkError(f"segment {self.id} is a self loop")
        if not self.length > 0:
            raise NetworkError(f"segment {self.id} has nonpositive length")


@dataclass(frozen=True)
class OdPair:
    origin: int
    destination: int

    def __post_init__(self):
        if self.origin == self.destination:
            raise NetworkError("origin equals destination")

    def __str__(self):
        return f"{self.origin}:{self.destination}"


@dataclass(frozen=True)
class Path:
    segments: tuple[int, ...]
    incidence: np.ndarray = field(compare=False, repr=False)

    @classmethod
    def from_segments(cls, segments, n: int) -> "Path":
        segments = tuple(int(s) for s in segments)
        inc = np.zeros(n)
        inc[list(segments)] = 1.0
        return cls(segments, inc)

    def cost(self, costs) -> float:
        return float(np.asarray(costs)[list(self.segments)].sum()) if self.segments else 0.0

    def __len__(self):
        return len(self.segments)


class Network:
    """Immutable directed multigraph; segment ids are dense ``0..n-1``."""

    def __init__(self, segments, nodes=None):
        segments = sorted(segments, key=lambda s: s.id)
        if [s.id for s in segments] != list(range(len(segments))):
            raise NetworkError("segment ids must be dense 0..n-1")
        declared = set(nodes) if nodes is not None else set()
        ends = {s.tail for s in segments} | {s.head for s in segments}
        if nodes is not None and not ends <= declared:
            raise NetworkError(f"undeclared endpoints {sorted(ends - declared)[:5]}")
        self.segments: tuple[Segment, ...] = tuple(segments)
        self.nodes: tuple[int, ...] = tuple(sorted(declared | ends))
        self._out: dict[int, list[Segment]] = {v: [] for v in self.nodes}
        self._in: dict[int, list[Segment]] = {v: [] for v in self.nodes}
        for s in self.segments:
            self._out[s.tail].append(s)
            self._in[s.head].append(s)
        for v in self.nodes:
            self._out[v].sort(key=lambda s: (s.head, s.id))
            self._in[v].sort(key=lambda s: (s.tail, s.id))

    @property
    def n(self) -> int:
        return len(self.segments)

    def out_segments(self, v) -> list[Segment]:
        return self._out[v]

    def in_segments(self, v) -> list[Segment]:
        return self._in[v]

    @property
    def lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.segments])

    def sidewalk_ids(self) -> list[int]:
        return [s.id for s in self.segments if s.kind == SegmentKind.SIDEWALK]

    def check_od(self, od: OdPair) -> None:
        for v in (od.origin, od.destination):
            if v not in self._out:
                raise NetworkError(f"node {v} not in network")

    def path_nodes(self, path: Path) -> list[int]:
        if not path.segments:
            return []
        nodes = [self.segments[path.segments[0]].tail]
        nodes += [self.segments[j].head for j in path.segments]
        return nodes

    def is_path(self, path: Path, od: OdPair) -> bool:
        if not path.segments:
            return False
        segs = [self.segments[j] for j in path.segments]
        if segs[0].tail != od.origin or segs[-1].head != od.destination:
            return False
        if any(a.head != b.tail for a, b in zip(segs, segs[1:])):
            return False
        nodes = self.path_nodes(path)
        return len(nodes) == len(set(nodes))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "tail", "head", "length_m", "kind"])
            for s in self.segments:
                w.writerow([s.id, s.tail, s.head, repr(float(s.length)), s.kind.value])

    @classmethod
    def from_csv(cls, path) -> "Network":
        path = FsPath(path)
        if not path.exists():
            raise FileNotFoundError(str(path))
        segs = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            need = {"id", "tail", "head", "length_m", "kind"}
            if reader.fieldnames is None or not need <= set(reader.fieldnames):
                raise NetworkError(f"{path}: header must be id,tail,head,length_m,kind")
            for row in reader:
                try:
                    tail, head = int(row["tail"]), int(row["head"])
                    if tail < 0 or head < 0:
                        raise ValueError("negative node id")
                    segs.append(Segment(int(row["id"]), tail, head,
                                        float(row["length_m"]), SegmentKind(row["kind"].strip())))
                except ValueError as exc:
                    raise NetworkError(f"{path}: bad row {row}: {exc}") from exc
        return cls(segs)


def shortest_path(network: Network, costs, od: OdPair) -> tuple[Path, float]:
    """Dijkstra with deterministic tie-breaking.

    Among equally short routes the predecessor of each node is the tight
    incoming segment with the smallest (tail node id, segment id) whose
    tail was settled earlier, so the returned path is always simple.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.size != network.n:
        raise NetworkError("cost vector length differs from segment count")
    if np.any(costs < 0):
        raise NegativeCost("segment costs must be nonnegative")
    network.check_od(od)
    dist = {od.origin: 0.0}
    order: dict[int, int] = {}
    heap = [(0.0, od.origin)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in order:
            continue
        order[v] = len(order)
        if v == od.destination:
            break
        for s in network.out_segments(v):
            nd = d + costs[s.id]
            if s.head not in order and nd < dist.get(s.head, np.inf):
                dist[s.head] = nd
                heapq.heappush(heap, (nd, s.head))
    if od.destination not in order:
        raise Unreachable(f"no path {od}")
    segs = []
    v = od.destination
    while v != od.origin:
        best = None
        for s in network.in_segments(v):
            u = s.tail
            if u in order and order[u] < order[v]:
                if _tight(dist[u] + costs[s.id], dist[v]):
                    best = s
                    break
        assert best is not None
        segs.append(best.id)
        v = best.tail
    segs.reverse()
    path = Path.from_segments(segs, network.n)
    return path, path.cost(costs)


def _tight(a, b):
    return abs(a - b) <= 1e-12 * max(1.0, abs(b))


def shortest_path_tree(network: Network, costs, origin) -> dict[int, float]:
    """Distances from ``origin`` to every reachable node."""
    costs = np.asarray(costs, dtype=float)
    dist = {origin: 0.0}
    done = set()
    heap = [(0.0, origin)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for s in network.out_segments(v):
            nd = d + costs[s.id]
            if nd < dist.get(s.head, np.inf):
                dist[s.head] = nd
                heapq.heappush(heap, (nd, s.head))
    return dist


def enumerate_paths(network: Network, od: OdPair, max_segments: int,
                    cap: int = 1_000_000) -> list[Path]:
    """All simple ``od`` paths with at most ``max_segments`` segments.

    Order is lexicographic in the node sequence, then segment ids (for
    parallel segments).
    """
    network.check_od(od)
    out: list[Path] = []
    if max_segments < 1:
        return out
    visited = {od.origin}
    stack: list[int] = []

    def extend(v):
        if v == od.destination:
            out.append(Path.from_segments(stack, network.n))
            if len(out) > cap:
                raise ExplosionGuard(f"more than {cap} paths for {od}")
            return
        if len(stack) >= max_segments:
            return
        for s in network.out_segments(v):
            if s.head in visited:
                continue
            visited.add(s.head)
            stack.append(s.id)
            extend(s.head)
            stack.pop()
            visited.discard(s.head)

    extend(od.origin)
    return out


@dataclass
class FlowConstraints:
    """Node balance rows ``A_eq @ x = b_eq`` with ``0 <= x <= 1`` binary."""

    A_eq: np.ndarray
    b_eq: np.ndarray
    nodes: tuple[int, ...]
    lo: np.ndarray
    hi: np.ndarray


def flow_constraints(network: Network, od: OdPair) -> FlowConstraints:
    network.check_od(od)
    idx = {v: r for r, v in enumerate(network.nodes)}
    A = np.zeros((len(network.nodes), network.n))
    for s in network.segments:
        A[idx[s.tail], s.id] += 1.0
        A[idx[s.head], s.id] -= 1.0
    b = np.zeros(len(network.nodes))
    b[idx[od.origin]] = 1.0
    b[idx[od.destination]] = -1.0
    return FlowConstraints(A, b, network.nodes, np.zeros(network.n), np.ones(network.n))


def path_from_flow(network: Network, x, od: OdPair, tol: float = 1e-6) -> Path:
    """Read the s-t path out of a binary flow vector (cycles are dropped)."""
    x = np.asarray(x, dtype=float)
    chosen = {j for j in range(network.n) if x[j] > 0.5}
    segs = []
    v = od.origin
    seen = {v}
    while v != od.destination:
        nxt = [s for s in network.out_segments(v) if s.id in chosen]
        if not nxt:
            raise NetworkError("flow vector does not describe an s-t path")
        s = nxt[0]
        if s.head in seen:
            raise NetworkError("flow vector revisits a node")
        segs.append(s.id)
        chosen.discard(s.id)
        v = s.head
        seen.add(v)
    return Path.from_segments(segs, network.n)


def grid_network(rows: int, cols: int, block_m: float = 60.0, crossing_m: float = 12.0,
                 seed: int = 0, jitter: float = 0.25, n_links: int | None = None) -> Network:
    """Synthetic street grid of bidirectional sidewalks and crossings.

    Grid intersections are nodes.  Horizontal links are sidewalks; vertical
    links alternate between sidewalks and crossings so the network mixes
    both kinds.  Each undirected link becomes two opposite segments.
    With ``n_links`` set, random links are removed (never disconnecting
    the grid) until that many remain.
    """
    rng = np.random.default_rng(seed)
    links = []

    def node(r, c):
        return r * cols + c

    def jit():
        return 1 + jitter * (2 * rng.random() - 1)

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                links.append((node(r, c), node(r, c + 1), block_m * jit(), SegmentKind.SIDEWALK))
            if r + 1 < rows:
                if (r + c) % 2 == 0:
                    links.append((node(r, c), node(r + 1, c), crossing_m * jit(),
                                  SegmentKind.CROSSING))
                else:
                    links.append((node(r, c), node(r + 1, c), block_m * jit(),
                                  SegmentKind.SIDEWALK))
    n_nodes = rows * cols
    if n_links is not None:
        if not n_nodes - 1 <= n_links <= len(links):
            raise NetworkError(f"n_links must lie in [{n_nodes - 1}, {len(links)}]")
        orig = list(links)
        for k in rng.permutation(len(orig)):
            if len(links) <= n_links:
                break
            cand = [l for l in links if l is not orig[k]]
            if _connected(n_nodes, cand):
                links = cand
    segs = []
    for u, v, length, kind in links:
        for a, b in ((u, v), (v, u)):
            segs.append(Segment(len(segs), a, b, float(length), kind))
    return Network(segs, nodes=range(n_nodes))


def _connected(n_nodes, links) -> bool:
    adj = {v: [] for v in range(n_nodes)}
    for u, v, *_ in links:
        adj[u].append(v)
        adj[v].append(u)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n_nodes


def random_network(rng: np.random.Generator, n_nodes: int = 6, n_segments: int = 10,
                   od: OdPair | None = None) -> tuple[Network, OdPair]:
    """Small random digraph with at least one origin-destination path."""
    od = od or OdPair(0, n_nodes - 1)
    segs = []
    # guarantee connectivity with a random simple chain
    inner = [v for v in range(n_nodes) if v not in (od.origin, od.destination)]
    rng.shuffle(inner)
    k = int(rng.integers(0, len(inner) + 1))
    chain = [od.origin] + inner[:k] + [od.destination]
    for a, b in zip(chain, chain[1:]):
        segs.append((a, b))
    while len(segs) < n_segments:
        a, b = rng.integers(0, n_nodes, size=2)
        if a != b:
            segs.append((int(a), int(b)))
    segments = [Segment(i, a, b, float(rng.uniform(10, 100))) for i, (a, b) in enumerate(segs)]
    return Network(segments, nodes=range(n_nodes)), od
