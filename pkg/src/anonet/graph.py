"""Directed multigraphs, dynamic graphs, graph products and test topologies.

Vertices are ``1..n``. An edge's id is its index in ``edges``; iteration that
must be reproducible goes through :meth:`DirectedMultigraph.canonical_edges`,
ordered by ``(source, target, id)``.
"""

from __future__ import annotations

import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from .values import format_value, parse_value


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class DirectedMultigraph:
    n: int
    edges: tuple[tuple[int, int], ...] = ()
    valuation: tuple[Any, ...] | None = None
    ports: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("a graph needs at least one vertex")
        object.__setattr__(self, "edges", tuple((int(s), int(t)) for s, t in self.edges))
        for s, t in self.edges:
            if not (1 <= s <= self.n and 1 <= t <= self.n):
                raise GraphError(f"edge ({s}, {t}) leaves the vertex set 1..{self.n}")
        if self.valuation is not None:
            if isinstance(self.valuation, Mapping):
                object.__setattr__(
                    self, "valuation", tuple(self.valuation[v] for v in range(1, self.n + 1))
                )
            else:
                object.__setattr__(self, "valuation", tuple(self.valuation))
            if len(self.valuation) != self.n:
                raise GraphError("valuation must give one value per vertex")
        if self.ports is not None:
            if isinstance(self.ports, Mapping):
                object.__setattr__(
                    self, "ports", tuple(int(self.ports[e]) for e in range(len(self.edges)))
                )
            else:
                object.__setattr__(self, "ports", tuple(int(p) for p in self.ports))
            if len(self.ports) != len(self.edges):
                raise GraphError("port coloring must label every edge")

    # -- structure -----------------------------------------------------
    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def source(self, e: int) -> int:
        return self.edges[e][0]

    def target(self, e: int) -> int:
        return self.edges[e][1]

    def value(self, v: int) -> Any:
        return None if self.valuation is None else self.valuation[v - 1]

    def canonical_edges(self) -> list[int]:
        return sorted(range(len(self.edges)), key=lambda e: (*self.edges[e], e))

    def out_edges(self, v: int) -> list[int]:
        return [e for e in self.canonical_edges() if self.edges[e][0] == v]

    def in_edges(self, v: int) -> list[int]:
        return [e for e in self.canonical_edges() if self.edges[e][1] == v]

    def out_degree(self, v: int) -> int:
        return sum(1 for s, _ in self.edges if s == v)

    def in_degree(self, v: int) -> int:
        return sum(1 for _, t in self.edges if t == v)

    def out_degrees(self) -> list[int]:
        deg = [0] * (self.n + 1)
        for s, _ in self.edges:
            deg[s] += 1
        return deg[1:]

    def multiplicity(self, i: int, j: int) -> int:
        """Number of edges i -> j."""
        return sum(1 for e in self.edges if e == (i, j))

    def multiplicities(self) -> Counter:
        return Counter(self.edges)

    def support(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    def has_self_loops(self) -> bool:
        loops = {s for s, t in self.edges if s == t}
        return len(loops) == self.n

    def is_bidirectional(self) -> bool:
        sup = self.support()
        return all((t, s) in sup for s, t in sup)

    def is_simple(self) -> bool:
        return len(set(self.edges)) == len(self.edges)

    def has_valid_ports(self) -> bool:
        if self.ports is None:
            return False
        for v in self.vertices:
            labels = sorted(self.ports[e] for e in range(len(self.edges)) if self.edges[e][0] == v)
            if labels != list(range(1, len(labels) + 1)):
                return False
        return True

    # -- derived graphs ------------------------------------------------
    def with_valuation(self, valuation: Sequence[Any] | Mapping[int, Any] | None) -> DirectedMultigraph:
        return DirectedMultigraph(self.n, self.edges, valuation, self.ports)

    def with_ports(self, ports: Sequence[int] | None) -> DirectedMultigraph:
        return DirectedMultigraph(self.n, self.edges, self.valuation, ports)

    def with_canonical_ports(self) -> DirectedMultigraph:
        """Label each vertex's out-edges 1..outdegree in canonical edge order."""
        ports = [0] * len(self.edges)
        used: Counter = Counter()
        for e in self.canonical_edges():
            s = self.edges[e][0]
            used[s] += 1
            ports[e] = used[s]
        return self.with_ports(ports)

    def with_self_loops(self) -> DirectedMultigraph:
        """Add one self-loop to every vertex that has none."""
        have = {s for s, t in self.edges if s == t}
        extra = [(v, v) for v in self.vertices if v not in have]
        ports = None
        if self.ports is not None:
            deg = self.out_degrees()
            ports = list(self.ports) + [deg[v - 1] + 1 for v, _ in extra]
        return DirectedMultigraph(self.n, self.edges + tuple(extra), self.valuation, ports)

    def outdegree_valued(self) -> DirectedMultigraph:
        """G_od: vertex value becomes (value, outdegree)."""
        deg = self.out_degrees()
        return self.with_valuation([(self.value(v), deg[v - 1]) for v in self.vertices])

    def simple(self) -> DirectedMultigraph:
        return DirectedMultigraph(self.n, tuple(sorted(self.support())))

    def reversed(self) -> DirectedMultigraph:
        return DirectedMultigraph(self.n, tuple((t, s) for s, t in self.edges), self.valuation)

    def __repr__(self) -> str:
        return f"DirectedMultigraph(n={self.n}, edges={list(self.edges)})"


def complete_graph(n: int) -> DirectedMultigraph:
    return DirectedMultigraph(n, tuple((i, j) for i in range(1, n + 1) for j in range(1, n + 1)))


def self_loops_only(n: int) -> DirectedMultigraph:
    return DirectedMultigraph(n, tuple((i, i) for i in range(1, n + 1)))


# -- reachability ------------------------------------------------------

def _successors(g: DirectedMultigraph) -> list[set[int]]:
    succ: list[set[int]] = [set() for _ in range(g.n + 1)]
    for s, t in g.edges:
        succ[s].add(t)
    return succ


def bfs_distances(g: DirectedMultigraph, source: int) -> dict[int, int]:
    succ = _successors(g)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in succ[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def is_strongly_connected(g: DirectedMultigraph) -> bool:
    if len(bfs_distances(g, 1)) != g.n:
        return False
    return len(bfs_distances(g.reversed(), 1)) == g.n


def diameter(g: DirectedMultigraph) -> int | None:
    """Largest shortest-path distance; None if not strongly connected."""
    best = 0
    for v in g.vertices:
        dist = bfs_distances(g, v)
        if len(dist) != g.n:
            return None
        best = max(best, max(dist.values()))
    return best


# -- products ----------------------------------------------------------

def _relation(g: DirectedMultigraph) -> list[int]:
    """Row i (1-based) as a bitset of successors."""
    rows = [0] * (g.n + 1)
    for s, t in g.edges:
        rows[s] |= 1 << t
    return rows


def _compose(r1: list[int], r2: list[int], n: int) -> list[int]:
    out = [0] * (n + 1)
    for i in range(1, n + 1):
        acc = 0
        row = r1[i]
        k = 1
        while row >> k:
            if (row >> k) & 1:
                acc |= r2[k]
            k += 1
        out[i] = acc
    return out


def _from_relation(rows: list[int], n: int) -> DirectedMultigraph:
    edges = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if (rows[i] >> j) & 1]
    return DirectedMultigraph(n, tuple(edges))


def product(g1: DirectedMultigraph, g2: DirectedMultigraph) -> DirectedMultigraph:
    """Simple graph of two-step journeys: i -> k in ``g1`` then k -> j in ``g2``."""
    if g1.n != g2.n:
        raise GraphError(f"vertex-count mismatch: {g1.n} vs {g2.n}")
    return _from_relation(_compose(_relation(g1), _relation(g2), g1.n), g1.n)


def is_complete(g: DirectedMultigraph) -> bool:
    return len(g.support()) == g.n * g.n


# -- dynamic graphs ----------------------------------------------------

@dataclass(frozen=True)
class DynamicGraph:
    """Round t >= 1 uses ``prefix[t-1]``, then cycles through ``cycle`` forever."""

    n: int
    prefix: tuple[DirectedMultigraph, ...] = ()
    cycle: tuple[DirectedMultigraph, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise GraphError("a dynamic graph needs a non-empty repeating cycle")
        for g in self.prefix + self.cycle:
            if g.n != self.n:
                raise GraphError("all rounds must share the vertex set")
            if not g.has_self_loops():
                raise GraphError("every round graph needs a self-loop at each vertex")

    @classmethod
    def static(cls, g: DirectedMultigraph) -> DynamicGraph:
        return cls(g.n, (), (g,))

    def at(self, t: int) -> DirectedMultigraph:
        if t < 1:
            raise GraphError("rounds start at 1")
        if t <= len(self.prefix):
            return self.prefix[t - 1]
        return self.cycle[(t - len(self.prefix) - 1) % len(self.cycle)]

    @property
    def period_horizon(self) -> int:
        """Number of distinct window starts; later starts repeat earlier ones."""
        return len(self.prefix) + len(self.cycle)

    def rounds(self, horizon: int) -> list[DirectedMultigraph]:
        return [self.at(t) for t in range(1, horizon + 1)]


def _window_length(rounds_at: Callable[[int], DirectedMultigraph], n: int, t: int, limit: int) -> int | None:
    full = (1 << (n + 1)) - 2
    rel = _relation(rounds_at(t))
    for d in range(1, limit + 1):
        if all(rel[i] == full for i in range(1, n + 1)):
            return d
        if d == limit:
            break
        rel = _compose(rel, _relation(rounds_at(t + d)), n)
    return None


def dynamic_diameter(g: DynamicGraph | DirectedMultigraph, horizon: int) -> int | None:
    """Smallest D whose D-round window products starting at rounds 1..horizon are all complete."""
    if horizon < 1:
        raise GraphError("horizon must be positive")
    dg = DynamicGraph.static(g) if isinstance(g, DirectedMultigraph) else g
    worst = 0
    for t in range(1, horizon + 1):
        d = _window_length(dg.at, dg.n, t, horizon)
        if d is None:
            return None
        worst = max(worst, d)
    return worst


# -- generators --------------------------------------------------------

KINDS = (
    "bidirectional-ring",
    "directed-ring",
    "star-bidirectional",
    "complete",
    "random-strongly-connected",
    "random-symmetric",
    "random-dynamic-with-diameter",
)


def _finish(g: DirectedMultigraph, self_loops: bool, ports: bool = False) -> DirectedMultigraph:
    if self_loops:
        g = g.with_self_loops()
    if ports:
        g = g.with_canonical_ports()
    return g


def bidirectional_ring(n: int, self_loops: bool = False) -> DirectedMultigraph:
    """Ring R^n; port 1 points to the successor, port 2 to the predecessor.

    For n = 2 the two directions give parallel edges and for n = 1 two self-loops,
    which keeps i -> ((i-1) mod p) + 1 a fibration between any two ring sizes.
    """
    edges, ports = [], []
    for i in range(1, n + 1):
        edges.append((i, i % n + 1))
        ports.append(1)
        edges.append((i, (i - 2) % n + 1))
        ports.append(2)
    g = DirectedMultigraph(n, tuple(edges), ports=tuple(ports))
    return g.with_self_loops() if self_loops else g


def directed_ring(n: int, self_loops: bool = False) -> DirectedMultigraph:
    g = DirectedMultigraph(n, tuple((i, i % n + 1) for i in range(1, n + 1)))
    return _finish(g, self_loops, ports=True)


def star_bidirectional(n: int, self_loops: bool = False, ports: bool = False) -> DirectedMultigraph:
    edges = []
    for leaf in range(2, n + 1):
        edges += [(1, leaf), (leaf, 1)]
    return _finish(DirectedMultigraph(n, tuple(edges)), self_loops, ports)


def random_strongly_connected(n: int, seed: int, p: float = 0.4, self_loops: bool = False,
                              ports: bool = False, max_tries: int = 10_000) -> DirectedMultigraph:
    rng = random.Random(seed)
    for _ in range(max_tries):
        edges = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)
                 if i != j and rng.random() < p]
        g = DirectedMultigraph(n, tuple(edges))
        if is_strongly_connected(g):
            return _finish(g, self_loops, ports)
    raise GraphError(f"no strongly connected graph found for n={n}, p={p}")


def random_symmetric(n: int, seed: int, p: float = 0.5, self_loops: bool = False,
                     ports: bool = False, max_tries: int = 10_000) -> DirectedMultigraph:
    rng = random.Random(seed)
    for _ in range(max_tries):
        edges = []
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                if rng.random() < p:
                    edges += [(i, j), (j, i)]
        g = DirectedMultigraph(n, tuple(edges))
        if is_strongly_connected(g):
            return _finish(g, self_loops, ports)
    raise GraphError(f"no connected symmetric graph found for n={n}, p={p}")


def _random_round(n: int, rng: random.Random, p: float) -> DirectedMultigraph:
    edges = [(i, i) for i in range(1, n + 1)]
    edges += [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j and rng.random() < p]
    return DirectedMultigraph(n, tuple(edges))


def random_dynamic_with_diameter(n: int, seed: int, D: int, cycle_length: int | None = None,
                                 max_tries: int = 2000) -> DynamicGraph:
    """Periodic schedule whose dynamic diameter is exactly ``D``.

    Random rounds are tried first at a density tuned to D; if none hits D
    exactly, one complete round per period plus D-1 random rounds whose joint
    product is incomplete is used, which forces the diameter to D.
    """
    if n < 1 or D < 1:
        raise GraphError("n and D must be positive")
    if n == 1 and D > 1:
        raise GraphError("a single vertex always has dynamic diameter 1")
    if D == 1:
        return DynamicGraph(n, (), (complete_graph(n),))
    rng = random.Random(seed)
    length = cycle_length or 2 * D
    p = min(0.9, 1.6 / (n * D ** 0.5))
    for attempt in range(max_tries):
        cycle = tuple(_random_round(n, rng, p) for _ in range(length))
        dg = DynamicGraph(n, (), cycle)
        d = dynamic_diameter(dg, dg.period_horizon) if _windows_bounded(dg, D) else None
        if d == D:
            return dg
        if d is not None and d < D:
            p *= 0.9
        else:
            p = min(0.95, p * 1.1)
    for _ in range(max_tries):
        sparse = [_random_round(n, rng, 0.5 / n) for _ in range(D - 1)]
        rel = sparse[0]
        for g in sparse[1:]:
            rel = product(rel, g)
        if not is_complete(rel):
            dg = DynamicGraph(n, (), tuple(sparse) + (complete_graph(n),))
            if dynamic_diameter(dg, dg.period_horizon) == D:
                return dg
    raise GraphError(f"could not build a schedule with n={n}, D={D}")


def _windows_bounded(dg: DynamicGraph, D: int) -> bool:
    return all(_window_length(dg.at, dg.n, t, D) is not None for t in range(1, dg.period_horizon + 1))


def generate(kind: str, n: int, seed: int = 0, **params) -> DirectedMultigraph | DynamicGraph:
    """Deterministic topology generator keyed by ``kind``."""
    if n < 1:
        raise GraphError("n must be positive")
    params = dict(params)
    self_loops = bool(params.pop("self_loops", False))
    ports = bool(params.pop("ports", False))
    if kind == "bidirectional-ring":
        g = bidirectional_ring(n, self_loops)
        if not ports:
            g = g.with_ports(None)
    elif kind == "directed-ring":
        g = directed_ring(n, self_loops)
        if not ports:
            g = g.with_ports(None)
    elif kind == "star-bidirectional":
        g = star_bidirectional(n, self_loops, ports)
    elif kind == "complete":
        g = _finish(complete_graph(n), False, ports)
    elif kind == "random-strongly-connected":
        g = random_strongly_connected(n, seed, self_loops=self_loops, ports=ports, **params)
        params = {}
    elif kind == "random-symmetric":
        g = random_symmetric(n, seed, self_loops=self_loops, ports=ports, **params)
        params = {}
    elif kind == "random-dynamic-with-diameter":
        if "D" not in params:
            raise GraphError("random-dynamic-with-diameter needs D")
        return random_dynamic_with_diameter(n, seed, **params)
    else:
        raise GraphError(f"unknown generator kind {kind!r}")
    if params:
        raise GraphError(f"unexpected parameters for {kind}: {sorted(params)}")
    return g


# -- JSON exchange -----------------------------------------------------

def graph_to_json(g: DirectedMultigraph) -> dict:
    doc: dict[str, Any] = {"n": g.n, "edges": [list(e) for e in g.edges]}
    if g.valuation is not None:
        doc["valuation"] = {str(v): format_value(g.value(v)) for v in g.vertices}
    if g.ports is not None:
        doc["ports"] = {str(e): p for e, p in enumerate(g.ports)}
    return doc


def graph_from_json(doc: Mapping[str, Any]) -> DirectedMultigraph:
    unknown = set(doc) - {"n", "edges", "valuation", "ports"}
    if unknown:
        raise GraphError(f"unknown graph fields: {sorted(unknown)}")
    n = int(doc["n"])
    edges = tuple((int(s), int(t)) for s, t in doc.get("edges", []))
    valuation = None
    if "valuation" in doc:
        raw = doc["valuation"]
        valuation = {int(k): parse_value(v) for k, v in raw.items()}
    ports = None
    if "ports" in doc:
        ports = {int(k): int(v) for k, v in doc["ports"].items()}
    return DirectedMultigraph(n, edges, valuation, ports)


def dynamic_to_json(g: DynamicGraph) -> dict:
    return {
        "n": g.n,
        "prefix": [graph_to_json(x) for x in g.prefix],
        "cycle": [graph_to_json(x) for x in g.cycle],
    }


def dynamic_from_json(doc: Mapping[str, Any]) -> DynamicGraph:
    unknown = set(doc) - {"n", "prefix", "cycle"}
    if unknown:
        raise GraphError(f"unknown dynamic graph fields: {sorted(unknown)}")
    return DynamicGraph(
        int(doc["n"]),
        tuple(graph_from_json(x) for x in doc.get("prefix", [])),
        tuple(graph_from_json(x) for x in doc["cycle"]),
    )


def load_any(doc: Mapping[str, Any]) -> DirectedMultigraph | DynamicGraph:
    return dynamic_from_json(doc) if "cycle" in doc else graph_from_json(doc)


def strongly_connected_digraphs(n: int, self_loops: bool = False) -> Iterable[DirectedMultigraph]:
    """All strongly connected simple digraphs on n vertices, one per isomorphism class."""
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    seen: set = set()
    from itertools import permutations

    perms = list(permutations(range(1, n + 1)))
    for mask in range(1 << len(pairs)):
        edges = tuple(pairs[k] for k in range(len(pairs)) if (mask >> k) & 1)
        g = DirectedMultigraph(n, edges)
        if not is_strongly_connected(g):
            continue
        canon = min(tuple(sorted((p[s - 1], p[t - 1]) for s, t in edges)) for p in perms)
        if canon in seen:
            continue
        seen.add(canon)
        yield _finish(g, self_loops)
