"""Synchronous round engine for anonymous algorithms.

In round t every active agent computes its outgoing messages from its state
(and, depending on the communication model, its outdegree or port labels),
messages travel along the round-t edges, and each active agent applies the
transition to the multiset of messages it received.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Sequence

from .functions import DISCRETE, distance
from .graph import DirectedMultigraph, DynamicGraph


class Model(str, Enum):
    BROADCAST = "simple-broadcast"
    OUTDEGREE = "outdegree-aware"
    PORT = "output-port-aware"
    SYMMETRIC = "symmetric"

    @classmethod
    def parse(cls, text: str | Model) -> Model:
        if isinstance(text, Model):
            return text
        aliases = {"broadcast": cls.BROADCAST, "od": cls.OUTDEGREE, "op": cls.PORT,
                   "sym": cls.SYMMETRIC, "port": cls.PORT, "outdegree": cls.OUTDEGREE}
        try:
            return aliases.get(text) or cls(text)
        except ValueError:
            raise ValueError(f"unknown communication model {text!r}") from None


ALL_MODELS = frozenset(Model)


class ModelError(ValueError):
    """The graph or algorithm does not fit the requested communication model."""


@dataclass(frozen=True)
class AlgorithmDescriptor:
    """An anonymous algorithm.

    ``sending(state, k)`` returns the k messages for output ports 1..k.
    ``transition(state, messages)`` receives the messages as a list whose order
    carries no meaning. With ``sees_outdegree`` the transition is called as
    ``transition(state, messages, outdegree)`` in the outdegree- and
    port-aware models.
    """

    name: str
    initial_state: Callable[[Any], Any]
    sending: Callable[[Any, int], Sequence[Any]]
    transition: Callable[..., Any]
    output: Callable[[Any], Any]
    models: frozenset = ALL_MODELS
    sees_outdegree: bool = False


@dataclass
class ExecutionTrace:
    algorithm: str
    model: Model
    inputs: list[Any] | None
    starts: list[int] | None
    states: list[list[Any]] = field(default_factory=list)
    outputs: list[list[Any]] = field(default_factory=list)
    graphs: list[DirectedMultigraph] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.states) - 1

    def outputs_for(self, output: Callable[[Any], Any]) -> list[list[Any]]:
        """Re-read every global state through another output map."""
        return [[output(s) for s in c] for c in self.states]

    def round_records(self, digest: Callable[[Any], Any] | None = None) -> list[dict]:
        from .functions import format_output

        recs = []
        for t, outs in enumerate(self.outputs):
            rec: dict[str, Any] = {"round": t, "outputs": [format_output(x) for x in outs]}
            if digest is not None:
                rec["states"] = [digest(s) for s in self.states[t]]
            recs.append(rec)
        return recs


def async_filter(g: DirectedMultigraph, t: int, starts: Sequence[int]) -> DirectedMultigraph:
    """Keep (i, j) iff i == j or both endpoints have started by round t."""
    keep = [e for e, (i, j) in enumerate(g.edges) if i == j or t >= max(starts[i - 1], starts[j - 1])]
    ports = None if g.ports is None else tuple(g.ports[e] for e in keep)
    return DirectedMultigraph(g.n, tuple(g.edges[e] for e in keep), g.valuation, ports)


def _schedule(g: DirectedMultigraph | DynamicGraph) -> Callable[[int], DirectedMultigraph]:
    if isinstance(g, DirectedMultigraph):
        return lambda t: g
    return g.at


def validate_model(model: Model, g: DirectedMultigraph | DynamicGraph, rounds: int = 1,
                   starts: Sequence[int] | None = None) -> None:
    model = Model.parse(model)
    if model is Model.PORT:
        if not isinstance(g, DirectedMultigraph):
            raise ModelError("output-port awareness needs a static graph")
        if not g.has_valid_ports():
            raise ModelError("output-port awareness needs a port coloring 1..outdegree at every vertex")
        if starts is not None and any(s > 1 for s in starts):
            raise ModelError("asynchronous starts would change port labels")
    if model is Model.SYMMETRIC:
        at = _schedule(g)
        horizon = rounds if isinstance(g, DynamicGraph) else 1
        if isinstance(g, DynamicGraph):
            horizon = min(max(rounds, 1), g.period_horizon)
        for t in range(1, horizon + 1):
            if not at(t).is_bidirectional():
                raise ModelError(f"symmetric model needs bidirectional links (round {t})")


def run(alg: AlgorithmDescriptor, model: Model | str, g: DirectedMultigraph | DynamicGraph,
        inputs: Sequence[Any] | None = None, *, rounds: int,
        starts: Sequence[int] | None = None, init_override: Sequence[Any] | None = None,
        outdegrees: Sequence[int] | None = None, shuffle_seed: int | None = None) -> ExecutionTrace:
    """Execute ``rounds`` synchronous rounds and return the full trace.

    ``outdegrees`` replaces the outdegree an agent sees in the outdegree-aware
    model; it is how a valued base graph B (whose own outdegrees differ from
    the valuation b) is executed.
    """
    model = Model.parse(model)
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    if model not in alg.models:
        raise ModelError(f"{alg.name} is not defined for the {model.value} model")
    n = g.n
    if init_override is None:
        if inputs is None or len(inputs) != n:
            raise ValueError(f"need exactly {n} inputs")
        state = [alg.initial_state(v) for v in inputs]
    else:
        if len(init_override) != n:
            raise ValueError(f"init_override must have {n} states")
        state = list(init_override)
    if starts is not None:
        starts = [int(s) for s in starts]
        if len(starts) != n or any(s < 1 for s in starts):
            raise ValueError("starts must give a round >= 1 per agent")
    if outdegrees is not None and (len(outdegrees) != n or not isinstance(g, DirectedMultigraph)):
        raise ValueError("outdegree override needs a static graph and one entry per vertex")
    validate_model(model, g, rounds, starts)

    at = _schedule(g)
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    trace = ExecutionTrace(alg.name, model, None if inputs is None else list(inputs),
                           None if starts is None else list(starts))
    trace.states.append(list(state))
    trace.outputs.append([alg.output(s) for s in state])
    for t in range(1, rounds + 1):
        gt = at(t)
        if starts is not None:
            gt = async_filter(gt, t, starts)
        if model is Model.SYMMETRIC and not gt.is_bidirectional():
            raise ModelError(f"symmetric model needs bidirectional links (round {t})")
        active = [starts is None or t >= starts[i] for i in range(n)]
        deg = list(outdegrees) if outdegrees is not None else gt.out_degrees()
        outgoing: list[Any] = [None] * n
        for i in range(n):
            if not active[i]:
                continue
            q = state[i]
            if model in (Model.BROADCAST, Model.SYMMETRIC):
                outgoing[i] = alg.sending(q, 1)[0]
            elif deg[i] > 0:
                msgs = list(alg.sending(q, deg[i]))
                if len(msgs) != deg[i]:
                    raise ModelError(f"{alg.name} produced {len(msgs)} messages for outdegree {deg[i]}")
                outgoing[i] = msgs
        inbox: list[list[tuple[int, Any]]] = [[] for _ in range(n)]
        for e in gt.canonical_edges():
            s, r = gt.edges[e]
            if not (active[s - 1] and active[r - 1]):
                continue
            out = outgoing[s - 1]
            if model in (Model.BROADCAST, Model.SYMMETRIC):
                msg = out
            elif model is Model.OUTDEGREE:
                msg = out[0]
            else:
                msg = out[gt.ports[e] - 1]
            inbox[r - 1].append((t, msg))
        new_state = list(state)
        for i in range(n):
            if not active[i]:
                continue
            received = inbox[i]
            if rng is not None:
                rng.shuffle(received)
            if any(tag != t for tag, _ in received):
                raise AssertionError("message delivered outside its round")
            msgs = [m for _, m in received]
            if alg.sees_outdegree and model in (Model.OUTDEGREE, Model.PORT):
                new_state[i] = alg.transition(state[i], msgs, deg[i])
            else:
                new_state[i] = alg.transition(state[i], msgs)
        state = new_state
        trace.graphs.append(gt)
        trace.states.append(list(state))
        trace.outputs.append([alg.output(s) for s in state])
    return trace


def converged(trace: ExecutionTrace | Sequence[Sequence[Any]], target: Any, metric: str = DISCRETE,
              eps: Any = 0) -> int | None:
    """First round from which every output stays within ``eps`` of ``target``."""
    outputs = trace.outputs if isinstance(trace, ExecutionTrace) else trace
    first = None
    for t in range(len(outputs) - 1, -1, -1):
        if all(x is not None and distance(x, target, metric) <= eps for x in outputs[t]):
            first = t
        else:
            break
    return first


def check_model_discipline(alg: AlgorithmDescriptor, model: Model | str, states: Iterable[Any],
                           probe_budget: int = 6) -> bool:
    """Probe ``sending`` and check the constancy law of ``model``."""
    model = Model.parse(model)
    for q in states:
        ref = alg.sending(q, 1)
        if len(ref) != 1:
            return False
        for k in range(1, probe_budget + 1):
            msgs = list(alg.sending(q, k))
            if len(msgs) != k:
                return False
            if model in (Model.BROADCAST, Model.SYMMETRIC):
                if any(m != ref[0] for m in msgs):
                    return False
            elif model is Model.OUTDEGREE:
                if any(m != msgs[0] for m in msgs):
                    return False
    return True
