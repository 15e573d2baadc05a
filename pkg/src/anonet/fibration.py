"""Graph morphisms, fibrations and the minimum base.

The minimum base is computed centrally by coarsest in-neighbourhood partition
refinement. The distributed, view-based reconstruction lives in
:mod:`anonet.static_algo`; this module is its oracle.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations
from typing import Any, Sequence

from .graph import DirectedMultigraph, GraphError, bidirectional_ring, is_strongly_connected
from .values import value_key


@dataclass(frozen=True)
class GraphMorphism:
    vertex_map: tuple[int, ...]  # vertex_map[v - 1] is the image of vertex v
    edge_map: tuple[int, ...]  # edge_map[e] is the image of edge id e

    def __call__(self, v: int) -> int:
        return self.vertex_map[v - 1]


def identity_morphism(g: DirectedMultigraph) -> GraphMorphism:
    return GraphMorphism(tuple(g.vertices), tuple(range(len(g.edges))))


def fibration_violation(m: GraphMorphism, g: DirectedMultigraph, b: DirectedMultigraph) -> str | None:
    """Why ``m`` is not a fibration G -> B, or None if it is one."""
    if len(m.vertex_map) != g.n or len(m.edge_map) != len(g.edges):
        return "maps are not total"
    if any(not 1 <= x <= b.n for x in m.vertex_map):
        return "vertex image outside B"
    if any(not 0 <= x < len(b.edges) for x in m.edge_map):
        return "edge image outside B"
    for e, (s, t) in enumerate(g.edges):
        be = m.edge_map[e]
        if b.source(be) != m(s) or b.target(be) != m(t):
            return f"edge {e} does not commute with source/target"
        if g.ports is not None and b.ports is not None and g.ports[e] != b.ports[be]:
            return f"edge {e} changes color"
    if (g.valuation is None) != (b.valuation is None):
        return "valuation present on only one side"
    if g.valuation is not None:
        for v in g.vertices:
            if g.value(v) != b.value(m(v)):
                return f"vertex {v} changes value"
    if set(m.vertex_map) != set(b.vertices):
        return "vertex map is not surjective"
    if set(m.edge_map) != set(range(len(b.edges))):
        return "edge map is not surjective"
    lifts = Counter((m.edge_map[e], t) for e, (_, t) in enumerate(g.edges))
    for be, (_, bt) in enumerate(b.edges):
        for v in g.vertices:
            if m(v) == bt and lifts[(be, v)] != 1:
                return f"base edge {be} has {lifts[(be, v)]} lifts at vertex {v}"
    return None


def is_fibration(m: GraphMorphism, g: DirectedMultigraph, b: DirectedMultigraph) -> bool:
    return fibration_violation(m, g, b) is None


@dataclass(frozen=True)
class Fibration:
    g: DirectedMultigraph
    base: DirectedMultigraph
    morphism: GraphMorphism

    def __post_init__(self):
        reason = fibration_violation(self.morphism, self.g, self.base)
        if reason is not None:
            raise GraphError(f"not a fibration: {reason}")

    @property
    def vertex_map(self) -> tuple[int, ...]:
        return self.morphism.vertex_map

    @property
    def edge_map(self) -> tuple[int, ...]:
        return self.morphism.edge_map

    @cached_property
    def fibres(self) -> tuple[tuple[int, ...], ...]:
        """fibres[i - 1] lists the vertices of G over base vertex i."""
        groups: dict[int, list[int]] = defaultdict(list)
        for v in self.g.vertices:
            groups[self.morphism(v)].append(v)
        return tuple(tuple(groups[i]) for i in self.base.vertices)

    def fibre_sizes(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.fibres)


def is_covering(f: Fibration) -> bool:
    """A fibration whose out-edges also lift uniquely at every vertex."""
    out_lifts = Counter((f.edge_map[e], s) for e, (s, _) in enumerate(f.g.edges))
    for be, (bs, _) in enumerate(f.base.edges):
        for v in f.g.vertices:
            if f.morphism(v) == bs and out_lifts[(be, v)] != 1:
                return False
    return True


# -- minimum base --------------------------------------------------------

def _edge_color(g: DirectedMultigraph, e: int) -> Any:
    return None if g.ports is None else g.ports[e]


def stable_partition(g: DirectedMultigraph) -> list[int]:
    """Coarsest partition stable under in-neighbourhood refinement.

    Returns class[v - 1] as canonical indices 1..m, classes ordered by
    (value, smallest member).
    """
    ins: list[list[int]] = [[] for _ in range(g.n + 1)]
    for e, (_, t) in enumerate(g.edges):
        ins[t].append(e)
    base_key = [value_key(g.value(v)) for v in g.vertices]
    color = _relabel(base_key)
    while True:
        sig = []
        for v in g.vertices:
            incoming = sorted(
                Counter((color[g.source(e) - 1], value_key(_edge_color(g, e))) for e in ins[v]).items()
            )
            sig.append((color[v - 1], tuple(incoming)))
        refined = _relabel(sig)
        if len(set(refined)) == len(set(color)):
            break
        color = refined
    # canonical order: (value, smallest member)
    first: dict[int, int] = {}
    for v in g.vertices:
        first.setdefault(color[v - 1], v)
    order = sorted(first, key=lambda c: (base_key[first[c] - 1], first[c]))
    rank = {c: i + 1 for i, c in enumerate(order)}
    return [rank[color[v - 1]] for v in g.vertices]


def _relabel(keys: Sequence[Any]) -> list[int]:
    ids: dict[Any, int] = {}
    return [ids.setdefault(k, len(ids)) for k in keys]


def quotient(g: DirectedMultigraph, classes: Sequence[int]) -> Fibration:
    """Quotient of ``g`` by a partition that is stable under in-neighbourhoods."""
    m = max(classes)
    cls = lambda v: classes[v - 1]  # noqa: E731
    members: dict[int, list[int]] = defaultdict(list)
    for v in g.vertices:
        members[cls(v)].append(v)

    def groups(v: int) -> dict[tuple, list[int]]:
        out: dict[tuple, list[int]] = defaultdict(list)
        for e in g.in_edges(v):
            out[(cls(g.source(e)), value_key(_edge_color(g, e)), _edge_color(g, e))].append(e)
        return out

    b_edges: list[tuple[int, int]] = []
    b_ports: list[Any] = []
    slot: dict[tuple[int, tuple], list[int]] = {}
    for c in range(1, m + 1):
        rep = members[c][0]
        for key, es in sorted(groups(rep).items(), key=lambda kv: kv[0][:2]):
            ids = []
            for _ in es:
                ids.append(len(b_edges))
                b_edges.append((key[0], c))
                b_ports.append(key[2])
            slot[(c, key[:2])] = ids
    edge_map = [0] * len(g.edges)
    for v in g.vertices:
        for key, es in groups(v).items():
            ids = slot.get((cls(v), key[:2]))
            if ids is None or len(ids) != len(es):
                raise GraphError("partition is not stable under in-neighbourhoods")
            for e, be in zip(es, ids):
                edge_map[e] = be
    valuation = None
    if g.valuation is not None:
        valuation = [g.value(members[c][0]) for c in range(1, m + 1)]
    ports = tuple(b_ports) if g.ports is not None else None
    base = DirectedMultigraph(m, tuple(b_edges), valuation, ports)
    return Fibration(g, base, GraphMorphism(tuple(classes), tuple(edge_map)))


def minimum_base(g: DirectedMultigraph) -> tuple[DirectedMultigraph, Fibration]:
    if not is_strongly_connected(g):
        raise GraphError("minimum base requires a strongly connected graph")
    f = quotient(g, stable_partition(g))
    return f.base, f


def is_fibration_prime(g: DirectedMultigraph) -> bool:
    return minimum_base(g)[0].n == g.n


def lift_state(f: Fibration, c: Sequence[Any]) -> list[Any]:
    """Copy each base vertex's state to its whole fibre (c[i - 1] is base vertex i)."""
    if len(c) != f.base.n:
        raise ValueError("state must cover every base vertex")
    return [c[f.morphism(v) - 1] for v in f.g.vertices]


def ring_fibration(n: int, p: int, self_loops: bool = False) -> Fibration:
    """i -> ((i - 1) mod p) + 1 from R^n onto R^p, ports preserved."""
    if p < 1 or n % p:
        raise GraphError(f"{p} does not divide {n}")
    g = bidirectional_ring(n, self_loops)
    b = bidirectional_ring(p, self_loops)
    phi = lambda i: (i - 1) % p + 1  # noqa: E731
    edge_map = []
    for e in range(len(g.edges)):
        if e < 2 * n:
            i, k = divmod(e, 2)
            edge_map.append(2 * (phi(i + 1) - 1) + k)
        else:
            edge_map.append(2 * p + phi(e - 2 * n + 1) - 1)
    return Fibration(g, b, GraphMorphism(tuple(phi(i) for i in g.vertices), tuple(edge_map)))


def _edge_key(g: DirectedMultigraph, e: int, perm: Sequence[int] | None = None) -> tuple:
    s, t = g.edges[e]
    if perm is not None:
        s, t = perm[s - 1], perm[t - 1]
    return (s, t, value_key(_edge_color(g, e)))


def find_isomorphism(g: DirectedMultigraph, h: DirectedMultigraph) -> GraphMorphism | None:
    """Exhaustive search; fine for n <= 8."""
    if g.n != h.n or len(g.edges) != len(h.edges):
        return None
    if (g.valuation is None) != (h.valuation is None):
        return None
    target = Counter(_edge_key(h, e) for e in range(len(h.edges)))
    for perm in permutations(h.vertices):
        if g.valuation is not None and any(
            g.value(v) != h.value(perm[v - 1]) for v in g.vertices
        ):
            continue
        if Counter(_edge_key(g, e, perm) for e in range(len(g.edges))) != target:
            continue
        pool: dict[tuple, list[int]] = defaultdict(list)
        for e in range(len(h.edges)):
            pool[_edge_key(h, e)].append(e)
        edge_map = [pool[_edge_key(g, e, perm)].pop(0) for e in range(len(g.edges))]
        return GraphMorphism(tuple(perm), tuple(edge_map))
    return None


def is_isomorphic(g: DirectedMultigraph, h: DirectedMultigraph) -> bool:
    return find_isomorphism(g, h) is not None
