import random

import pytest
from hypothesis import given, settings, strategies as st

from anonet import corpus
from anonet.engine import Model, run
from anonet.fibration import (Fibration, GraphMorphism, identity_morphism, is_covering, is_fibration,
                              is_fibration_prime, is_isomorphic, lift_state, minimum_base, ring_fibration)
from anonet.graph import (DirectedMultigraph, GraphError, bidirectional_ring, directed_ring,
                          random_strongly_connected, random_symmetric, star_bidirectional)
from anonet.static_algo import labelled_graph

from oracles import brute_force_fibres


def test_isomorphism_is_fibration():
    g = random_strongly_connected(5, 2)
    perm = (3, 1, 5, 2, 4)
    edges = tuple((perm[s - 1], perm[t - 1]) for s, t in g.edges)
    h = DirectedMultigraph(5, edges)
    assert is_fibration(GraphMorphism(perm, tuple(range(len(edges)))), g, h)
    assert is_fibration(identity_morphism(g), g, g)


def test_ring_fibration_6_3():
    f = ring_fibration(6, 3)
    assert f.fibre_sizes() == (2, 2, 2)
    assert is_covering(f)


def test_ring_fibration_identity_and_6_2():
    f = ring_fibration(4, 4)
    assert f.vertex_map == (1, 2, 3, 4) and f.fibre_sizes() == (1, 1, 1, 1)
    assert ring_fibration(6, 2).fibres == ((1, 3, 5), (2, 4, 6))


def test_ring_fibration_needs_divisor():
    with pytest.raises(GraphError):
        ring_fibration(6, 4)


def test_path_collapse_is_not_fibration():
    g = DirectedMultigraph(2, ((1, 2),))
    b = DirectedMultigraph(1, ((1, 1),))
    assert not is_fibration(GraphMorphism((1, 1), (0,)), g, b)
    with pytest.raises(GraphError):
        Fibration(g, b, GraphMorphism((1, 1), (0,)))


def test_star_collapse_is_not_covering():
    _, f = minimum_base(star_bidirectional(3))
    assert sorted(f.fibre_sizes()) == [1, 2]
    assert not is_covering(f)
    assert is_covering(Fibration(f.g, f.g, identity_morphism(f.g)))


@pytest.mark.parametrize("loops,count", [(False, 2), (True, 3)])
def test_ring_minimum_base(loops, count):
    base, f = minimum_base(bidirectional_ring(6, loops).with_ports(None))
    assert base.n == 1 and len(base.edges) == count
    assert f.fibres == ((1, 2, 3, 4, 5, 6),)


def test_star_minimum_base():
    base, f = minimum_base(star_bidirectional(3))
    c = f.vertex_map[0]
    leaf = 3 - c
    assert base.multiplicity(c, leaf) == 1 and base.multiplicity(leaf, c) == 2
    assert f.fibres[c - 1] == (1,) and f.fibres[leaf - 1] == (2, 3)


def test_minimum_base_needs_strong_connectivity():
    with pytest.raises(GraphError):
        minimum_base(DirectedMultigraph(2, ((1, 2),)))


def test_prime_examples():
    assert is_fibration_prime(DirectedMultigraph(1, ((1, 1),)))
    r6 = bidirectional_ring(6).with_ports(None)
    assert not is_fibration_prime(r6)
    assert is_fibration_prime(r6.with_valuation([1, 2, 3, 4, 5, 6]))
    g = directed_ring(4).with_ports(None).with_valuation(list("abcd"))
    base, f = minimum_base(g)
    assert is_isomorphic(base, g) and f.vertex_map == (1, 2, 3, 4)


def test_lift_state_examples():
    f = ring_fibration(6, 3)
    assert lift_state(f, ["a", "b", "c"]) == ["a", "b", "c", "a", "b", "c"]
    assert lift_state(ring_fibration(4, 1), [7]) == [7] * 4
    assert lift_state(ring_fibration(3, 3), [1, 2, 3]) == [1, 2, 3]


def random_graph(rng, n_max=6, symmetric=False, ports=False):
    n = rng.randint(1, n_max)
    seed = rng.randrange(10**6)
    loops = rng.random() < 0.5
    if symmetric:
        g = random_symmetric(n, seed, self_loops=loops)
    else:
        g = random_strongly_connected(n, seed, p=rng.choice([0.3, 0.5]), self_loops=loops)
    return g.with_canonical_ports() if ports else g


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans(), st.booleans())
def test_minimum_base_is_idempotent(seed, valued, ports):
    rng = random.Random(seed)
    g = random_graph(rng, ports=ports)
    if valued:
        g = g.with_valuation([rng.choice("ab") for _ in g.vertices])
    base, f = minimum_base(g)
    assert is_fibration(f.morphism, g, base)
    again, _ = minimum_base(base)
    assert is_isomorphic(again, base)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_port_colored_bases_are_coverings(seed):
    g = random_graph(random.Random(seed), ports=True)
    _, f = minimum_base(g)
    assert is_covering(f)
    assert len(set(f.fibre_sizes())) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([None, "ab", "abc"]), st.booleans())
def test_minimum_base_matches_brute_force(seed, alphabet, ports):
    rng = random.Random(seed)
    g = random_graph(rng, n_max=5, ports=ports)
    if alphabet:
        g = g.with_valuation([rng.choice(alphabet) for _ in g.vertices])
    _, f = minimum_base(g)
    assert sorted(f.fibres) == brute_force_fibres(g)


# -- lifting lemma -------------------------------------------------------

LIFT_CASES = [(name, Model.BROADCAST) for name in corpus.BROADCAST_CORPUS]
LIFT_CASES += [(name, Model.SYMMETRIC) for name in corpus.BROADCAST_CORPUS]
LIFT_CASES += [("outdegree-weighted", Model.OUTDEGREE), ("flooding", Model.OUTDEGREE),
               ("outdegree-weighted", Model.PORT), ("port-echo", Model.PORT), ("sum-received", Model.PORT)]


def lifting_holds(g, inputs, name, model, rounds=10):
    h = labelled_graph(g, inputs, model)
    base, f = minimum_base(h)
    b_inputs = [v[0] for v in base.valuation]
    outdeg = [v[2] for v in base.valuation] if model is Model.OUTDEGREE else None
    alg = corpus.get(name)
    small = run(alg, model, base, b_inputs, rounds=rounds, outdegrees=outdeg)
    big = run(alg, model, g, inputs, rounds=rounds)
    return all(big.states[t] == lift_state(f, small.states[t]) for t in range(rounds + 1))


@pytest.mark.parametrize("name,model", LIFT_CASES)
def test_lifting_lemma(name, model):
    rng = random.Random(f"{name}|{model.value}")
    for _ in range(6):
        g = random_graph(rng, symmetric=model is Model.SYMMETRIC, ports=model is Model.PORT)
        inputs = [rng.choice([1, 2]) for _ in g.vertices]
        assert lifting_holds(g, inputs, name, model)


def test_lifting_on_star_outdegree():
    g = star_bidirectional(5)
    assert lifting_holds(g, [3, 1, 1, 1, 1], "outdegree-weighted", Model.OUTDEGREE, rounds=8)
