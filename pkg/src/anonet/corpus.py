"""A registry of small anonymous algorithms used by scenarios and witnesses."""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable

from .engine import AlgorithmDescriptor, Model
from .values import value_key

_P = 1_000_003


def flooding() -> AlgorithmDescriptor:
    """Every agent ends up holding the set of input values."""
    return AlgorithmDescriptor(
        "flooding",
        lambda v: frozenset([v]),
        lambda q, k: [q] * k,
        lambda q, msgs: q.union(*msgs),
        lambda q: q,
    )


def min_propagation() -> AlgorithmDescriptor:
    return AlgorithmDescriptor(
        "min",
        lambda v: v,
        lambda q, k: [q] * k,
        lambda q, msgs: min([q, *msgs], key=value_key),
        lambda q: q,
    )


def sum_received() -> AlgorithmDescriptor:
    """q' = v + sum of received q's (mod a prime); numeric inputs."""
    def transition(q, msgs):
        v, acc = q
        return (v, (Fraction(v) + sum(msgs, Fraction(0))) % _P)

    return AlgorithmDescriptor(
        "sum-received",
        lambda v: (v, Fraction(v) % _P),
        lambda q, k: [q[1]] * k,
        transition,
        lambda q: q[1],
    )


def indegree_history() -> AlgorithmDescriptor:
    """Remembers how many messages arrived in each round."""
    return AlgorithmDescriptor(
        "indegree-history",
        lambda v: (v, ()),
        lambda q, k: [q[0]] * k,
        lambda q, msgs: (q[0], q[1] + (len(msgs),)),
        lambda q: q[1][-1] if q[1] else None,
    )


def neighborhood_digest() -> AlgorithmDescriptor:
    """Polynomial digest of the received multiset; order-free by construction."""
    def digest(v):
        return sum(ord(ch) * 31**i for i, ch in enumerate(repr(v))) % _P

    def transition(q, msgs):
        v, h = q
        acc = (digest(v) * 7 + sum((m * m + 3 * m + 1) % _P for m in msgs)) % _P
        return (v, acc)

    return AlgorithmDescriptor(
        "neighborhood-digest",
        lambda v: (v, digest(v)),
        lambda q, k: [q[1]] * k,
        transition,
        lambda q: q[1],
    )


def outdegree_weighted() -> AlgorithmDescriptor:
    """Isotropic but outdegree-dependent: ships its accumulator divided by k."""
    def transition(q, msgs):
        return (q[0], sum(msgs, Fraction(0)) + Fraction(q[0]))

    return AlgorithmDescriptor(
        "outdegree-weighted",
        lambda v: (v, Fraction(v)),
        lambda q, k: [q[1] / k] * k,
        transition,
        lambda q: q[1],
        frozenset({Model.OUTDEGREE, Model.PORT}),
    )


def port_echo() -> AlgorithmDescriptor:
    """Sends a port-dependent digest; only meaningful with output ports."""
    def transition(q, msgs):
        return (q[0], (q[1] + sum(msgs)) % _P)

    return AlgorithmDescriptor(
        "port-echo",
        lambda v: (v, Fraction(v) % _P),
        lambda q, k: [(q[1] * p + k) % _P for p in range(1, k + 1)],
        transition,
        lambda q: q[1],
        frozenset({Model.PORT}),
    )


REGISTRY: dict[str, Callable[[], AlgorithmDescriptor]] = {
    "flooding": flooding,
    "min": min_propagation,
    "sum-received": sum_received,
    "indegree-history": indegree_history,
    "neighborhood-digest": neighborhood_digest,
    "outdegree-weighted": outdegree_weighted,
    "port-echo": port_echo,
}

BROADCAST_CORPUS = ("flooding", "min", "sum-received", "indegree-history", "neighborhood-digest")


def get(name: str) -> AlgorithmDescriptor:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; known: {sorted(REGISTRY)}") from None


def supports(alg: AlgorithmDescriptor, model: Model) -> bool:
    return model in alg.models


__all__ = ["REGISTRY", "BROADCAST_CORPUS", "get", "supports"]
