"""View-based computation in static networks.

Every agent floods its in-view (the unfolding of the network rooted at
itself), rebuilds the minimum base from it, solves for the relative fibre
cardinalities allowed by the communication model and evaluates the target
function on a vector with the right value frequencies.
"""

from __future__ import annotations

import re
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Any, Sequence

from .engine import AlgorithmDescriptor, Model
from .functions import FREQUENCY_BASED, MULTISET_BASED, SET_BASED, TargetFunction
from .graph import DirectedMultigraph, GraphError
from .linalg import KernelError, build_M, kernel_generator
from .values import value_key


# -- hash-consed views ----------------------------------------------------

class ViewTable:
    """Interning table: a node is (label, sorted children) with children (edge label, node id)."""

    def __init__(self):
        self.clear()

    def clear(self) -> None:
        self._ids: dict[tuple, int] = {}
        self.labels: list[Any] = []
        self.children: list[tuple] = []
        self.heights: list[int] = []
        self._trunc: dict[tuple[int, int], int] = {}
        self._recon: dict[int, Any] = {}

    def __len__(self) -> int:
        return len(self.labels)

    def intern(self, label: Any, children: Sequence[tuple[Any, int]] = ()) -> int:
        kids = tuple(sorted(children, key=lambda c: (value_key(c[0]), c[1])))
        key = (label, kids)
        vid = self._ids.get(key)
        if vid is None:
            vid = len(self.labels)
            self._ids[key] = vid
            self.labels.append(label)
            self.children.append(kids)
            self.heights.append(1 + max((self.heights[c] for _, c in kids), default=-1))
        return vid

    def truncate(self, vid: int, h: int) -> int:
        if self.heights[vid] <= h:
            return vid
        key = (vid, h)
        out = self._trunc.get(key)
        if out is None:
            if h == 0:
                out = self.intern(_bare(self.labels[vid]))
            else:
                out = self.intern(self.labels[vid],
                                  [(lbl, self.truncate(c, h - 1)) for lbl, c in self.children[vid]])
            self._trunc[key] = out
        return out

    def reachable(self, vid: int) -> list[int]:
        seen = {vid}
        order = [vid]
        queue = deque([vid])
        while queue:
            u = queue.popleft()
            for _, c in self.children[u]:
                if c not in seen:
                    seen.add(c)
                    order.append(c)
                    queue.append(c)
        return order

    def to_tree(self, vid: int) -> dict:
        return {"label": repr(self.labels[vid]),
                "children": [[repr(lbl), self.to_tree(c)] for lbl, c in self.children[vid]]}


def _bare(label: Any) -> Any:
    # leaves never know their outdegree: an initial view is sent before any
    # transition has seen it, so truncated leaves drop it too
    if isinstance(label, tuple) and len(label) == 3:
        return (label[0], label[1], None)
    return label


VIEWS = ViewTable()


@dataclass(frozen=True)
class ViewState:
    depth: int  # rounds of history the view claims to hold
    view: int  # id in VIEWS
    value: Any  # the agent's input; read-only across rounds
    leader: bool = False


# -- help levels ------------------------------------------------------------

@dataclass(frozen=True)
class Help:
    kind: str = "none"  # none | bound | n | leaders
    value: int | None = None

    @classmethod
    def parse(cls, text: str | Help | None) -> Help:
        if text is None:
            return cls()
        if isinstance(text, Help):
            return text
        text = text.strip()
        if text == "none":
            return cls()
        m = re.fullmatch(r"(bound|n|leaders)\s*=\s*(\d+)", text)
        if not m or int(m.group(2)) < 1:
            raise ValueError(f"bad help mode {text!r}; expected none, bound=N, n=N or leaders=L")
        return cls(m.group(1), int(m.group(2)))

    def __str__(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}={self.value}"

    @property
    def knows_scale(self) -> bool:
        return self.kind in ("n", "leaders")


def required_kind(model: Model, help: Help) -> str:
    """Largest function class computable with this model and help."""
    if model is Model.BROADCAST:
        return SET_BASED
    return MULTISET_BASED if help.knows_scale else FREQUENCY_BASED


# -- reconstruction ---------------------------------------------------------

@dataclass(frozen=True)
class BaseCandidate:
    base: DirectedMultigraph  # valuation: per-class node label
    labels: tuple  # labels[c - 1] = (value, leader, outdegree or None)
    level: int  # truncation depth at which the partition stabilized


def reconstruct_base_from_view(state: ViewState | int, table: ViewTable = VIEWS) -> BaseCandidate | None:
    """Candidate minimum base read off a view; None while the view is too shallow."""
    if isinstance(state, ViewState) and _lone(state, table):
        lab = table.labels[state.view]
        return BaseCandidate(DirectedMultigraph(1, (), (lab,)), (lab,), 0)
    vid = state.view if isinstance(state, ViewState) else state
    if vid in table._recon:
        return table._recon[vid]
    out = _reconstruct(vid, table)
    table._recon[vid] = out
    return out


def _lone(q: ViewState, table: ViewTable) -> bool:
    # nothing ever arrives: a single agent without a self-loop is its own base
    return q.depth >= 1 and not table.children[q.view]


def _reconstruct(vid: int, table: ViewTable) -> BaseCandidate | None:
    t = table.heights[vid]
    nodes = table.reachable(vid)
    for k in range(t):
        upper = [u for u in nodes if table.heights[u] >= k + 1]
        tk = {table.truncate(u, k) for u in upper}
        tk1 = {table.truncate(u, k + 1) for u in upper}
        if len(tk) != len(tk1):
            continue
        # classes are the distinct depth-(k+1) views, named by their depth-k truncation
        reps = sorted(tk1, key=lambda u: (value_key(table.labels[u]), u))
        cls = {table.truncate(r, k): i + 1 for i, r in enumerate(reps)}
        edges: list[tuple[int, int]] = []
        colors: list[Any] = []
        for i, r in enumerate(reps):
            for lbl, c in table.children[r]:
                src = cls.get(table.truncate(c, k))
                if src is None:
                    return None
                edges.append((src, i + 1))
                colors.append(lbl)
        labels = tuple(table.labels[r] for r in reps)
        ports = tuple(colors) if any(c is not None for c in colors) else None
        try:
            base = DirectedMultigraph(len(reps), tuple(edges), labels, ports)
        except GraphError:
            return None
        return BaseCandidate(base, labels, k)
    return None


# -- fibre cardinalities ----------------------------------------------------

@dataclass(frozen=True)
class FibreSolution:
    base: DirectedMultigraph
    z: tuple[int, ...]
    scale: str = "unknown"  # unknown | exact | leaders
    cardinalities: tuple[int, ...] | None = None


def solve_fibre_cardinalities_od(base: DirectedMultigraph, b: Sequence[int] | None = None) -> FibreSolution:
    """z spans ker M; ``b`` defaults to the outdegree stored in each vertex label."""
    if b is None:
        if base.valuation is None:
            raise ValueError("base has no outdegree valuation")
        b = [lab[-1] for lab in base.valuation]
    return FibreSolution(base, tuple(kernel_generator(build_M(base, b))))


def solve_fibre_cardinalities_op(base: DirectedMultigraph) -> FibreSolution:
    return FibreSolution(base, (1,) * base.n)


def _cross(base: DirectedMultigraph) -> Counter:
    return base.multiplicities()


def solve_fibre_cardinalities_sym(base: DirectedMultigraph) -> FibreSolution:
    """Balance d(i,j) z_j = d(j,i) z_i, propagated along a spanning tree of the support."""
    d = _cross(base)
    m = base.n
    z: list[Fraction | None] = [None] * (m + 1)
    z[1] = Fraction(1)
    queue = deque([1])
    while queue:
        i = queue.popleft()
        for j in range(1, m + 1):
            if j == i or z[j] is not None:
                continue
            if d[(i, j)] and d[(j, i)]:
                z[j] = z[i] * d[(j, i)] / d[(i, j)]
                queue.append(j)
            elif d[(i, j)] or d[(j, i)]:
                raise KernelError(f"base edge between {i} and {j} has no reverse")
    if any(v is None for v in z[1:]):
        raise KernelError("base support is not connected")
    scale = lcm(*(v.denominator for v in z[1:]))
    ints = [int(v * scale) for v in z[1:]]
    g = 0
    for v in ints:
        g = gcd(g, v)
    ints = [v // g for v in ints]
    for (i, j), dij in d.items():
        if i != j and dij * ints[j - 1] != d[(j, i)] * ints[i - 1]:
            raise KernelError("balance equations are inconsistent")
    return FibreSolution(base, tuple(ints))


def sym_path_formula(base: DirectedMultigraph, order: Sequence[int] | None = None) -> tuple[int, ...]:
    """Closed form along a path order with nonzero consecutive cross-degrees."""
    d = _cross(base)
    order = list(order) if order is not None else list(base.vertices)
    m = len(order)
    fwd = [d[(order[k], order[k + 1])] for k in range(m - 1)]
    bwd = [d[(order[k + 1], order[k])] for k in range(m - 1)]
    if any(x == 0 for x in fwd + bwd):
        raise KernelError("zero cross-degree along the path")
    z1 = 1
    for x in fwd:
        z1 *= x
    vals = [Fraction(z1)]
    for k in range(m - 1):
        vals.append(vals[-1] * bwd[k] / fwd[k])
    ints = [int(v) for v in vals]
    g = 0
    for v in ints:
        g = gcd(g, v)
    out = [0] * m
    for pos, v in zip(order, ints):
        out[pos - 1] = v // g
    return tuple(out)


def solve(model: Model, base: DirectedMultigraph) -> FibreSolution:
    model = Model.parse(model)
    if model is Model.OUTDEGREE:
        return solve_fibre_cardinalities_od(base)
    if model is Model.PORT:
        return solve_fibre_cardinalities_op(base)
    if model is Model.SYMMETRIC:
        return solve_fibre_cardinalities_sym(base)
    raise ValueError("the simple broadcast model gives no fibre cardinalities")


def apply_help(sol: FibreSolution, help: Help | str, leader_classes: Sequence[int] = ()) -> FibreSolution:
    """Recover absolute fibre sizes when n or the number of leaders is known.

    ``leader_classes`` lists base vertices (1-based) whose fibres are leaders.
    """
    help = Help.parse(help)
    if help.kind in ("none", "bound"):
        return sol
    total = sum(sol.z)
    if help.kind == "n":
        if help.value % total:
            raise ArithmeticError(f"n = {help.value} is not a multiple of {total}")
        k = help.value // total
        return FibreSolution(sol.base, sol.z, "exact", tuple(k * x for x in sol.z))
    lead = sum(sol.z[c - 1] for c in set(leader_classes))
    if lead == 0:
        raise ArithmeticError("no leader class")
    card = [Fraction(help.value * x, lead) for x in sol.z]
    if any(c.denominator != 1 for c in card):
        raise ArithmeticError("leader count is inconsistent with the fibre ratios")
    return FibreSolution(sol.base, sol.z, "leaders", tuple(int(c) for c in card))


def evaluate_target(sol: FibreSolution, values: Sequence[Any], f: TargetFunction) -> Any:
    counts = sol.cardinalities if sol.cardinalities is not None else sol.z
    if f.kind == MULTISET_BASED and sol.cardinalities is None:
        raise ValueError(f"{f.name} needs the absolute fibre sizes")
    vec: list[Any] = []
    for w, c in zip(values, counts):
        vec += [w] * c
    return f(vec)


# -- the descriptor ---------------------------------------------------------

def _message_label(model: Model, port: int) -> Any:
    return port if model is Model.PORT else None


def make_static_algorithm(f: TargetFunction, model: Model | str, help: Help | str | None = None,
                          depth_cap: int | None = None, table: ViewTable = VIEWS) -> AlgorithmDescriptor:
    """Descriptor whose outputs stabilize on f(inputs) by round n + D.

    Inputs are plain values, or (value, is_leader) pairs with leader help.
    ``depth_cap`` bounds the stored view height, which makes the algorithm
    forget corrupted initial views after that many rounds.
    """
    model = Model.parse(model)
    help = Help.parse(help)
    allowed = required_kind(model, help)
    if not f.admits(allowed):
        raise ValueError(f"{f.name} is {f.kind}; {model.value} with help {help} allows {allowed} only")
    if model is Model.BROADCAST and help.kind != "none":
        raise ValueError("help is not used in the simple broadcast model")
    leaders = help.kind == "leaders"
    od = model is Model.OUTDEGREE

    def initial_state(inp):
        if leaders:
            value, flag = inp
        else:
            value, flag = inp, False
        return ViewState(0, table.intern((value, bool(flag), None)), value, bool(flag))

    def sending(q: ViewState, k: int):
        if model is Model.PORT:
            return [(p, q.view) for p in range(1, k + 1)]
        return [(None, q.view)] * k

    def transition(q: ViewState, msgs, outdeg=None):
        label = (q.value, q.leader, outdeg if od else None)
        vid = table.intern(label, msgs)
        depth = q.depth + 1
        if depth_cap is not None:
            vid = table.truncate(vid, depth_cap)
            depth = min(depth, depth_cap)
        return ViewState(depth, vid, q.value, q.leader)

    cache: dict[tuple[int, int], Any] = {}

    def output(q: ViewState):
        key = (q.view, q.depth)
        if key in cache:
            return cache[key]
        out = _evaluate(q, f, model, help, table)
        cache[key] = out
        return out

    return AlgorithmDescriptor(
        name=f"static[{f.name},{model.value},{help}]",
        initial_state=initial_state,
        sending=sending,
        transition=transition,
        output=output,
        models=frozenset({model}),
        sees_outdegree=od,
    )


def _evaluate(q: ViewState, f: TargetFunction, model: Model, help: Help, table: ViewTable) -> Any:
    if _lone(q, table):
        if model is Model.OUTDEGREE and table.labels[q.view][2] is None:
            return None
    elif table.heights[q.view] != q.depth:
        return None  # inconsistent (corrupted) state
    cand = reconstruct_base_from_view(q, table)
    if cand is None:
        return None
    values = [lab[0] for lab in cand.labels]
    if model is Model.BROADCAST:
        return f.on_frequencies({w: 1 for w in values})
    try:
        sol = solve(model, cand.base)
        if help.kind == "leaders":
            sol = apply_help(sol, help, [i + 1 for i, lab in enumerate(cand.labels) if lab[1]])
        else:
            sol = apply_help(sol, help)
    except (KernelError, ArithmeticError, ValueError):
        return None
    return evaluate_target(sol, values, f)


def labelled_graph(g: DirectedMultigraph, inputs: Sequence[Any], model: Model | str,
                   leaders: Sequence[bool] | None = None) -> DirectedMultigraph:
    """``g`` valued the way agents label themselves in views (oracle side)."""
    model = Model.parse(model)
    flags = list(leaders) if leaders is not None else [False] * g.n
    degs = g.out_degrees()
    vals = [(inputs[i], bool(flags[i]), degs[i] if model is Model.OUTDEGREE else None) for i in range(g.n)]
    h = g.with_valuation(vals)
    return h if model is Model.PORT else h.with_ports(None)
