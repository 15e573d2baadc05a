import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from anonet import corpus
from anonet.engine import (AlgorithmDescriptor, ExecutionTrace, Model, ModelError, async_filter,
                           check_model_discipline, converged, run, validate_model)
from anonet.functions import DISCRETE, EUCLIDEAN
from anonet.graph import (bidirectional_ring, complete_graph, diameter, directed_ring,
                          random_dynamic_with_diameter, random_strongly_connected, random_symmetric)
from anonet.pushsum import make_pushsum


@pytest.mark.parametrize("text,model", [("broadcast", Model.BROADCAST), ("od", Model.OUTDEGREE),
                                        ("op", Model.PORT), ("sym", Model.SYMMETRIC),
                                        ("outdegree-aware", Model.OUTDEGREE)])
def test_model_parse(text, model):
    assert Model.parse(text) is model


def test_model_parse_rejects():
    with pytest.raises(ValueError):
        Model.parse("telepathy")


@pytest.mark.parametrize("seed", range(8))
def test_flooding_reaches_support_by_diameter(seed):
    g = random_strongly_connected(6, seed)
    inputs = [random.Random(seed).choice("abc") + str(i % 2) for i in range(6)]
    D = diameter(g)
    tr = run(corpus.flooding(), Model.BROADCAST, g, inputs, rounds=D + 2)
    assert all(x == frozenset(inputs) for x in tr.outputs[D])
    r = converged(tr, frozenset(inputs), DISCRETE, 0)
    assert r is not None and r <= D


def test_zero_rounds_is_initial_configuration():
    tr = run(corpus.min_propagation(), "od", directed_ring(3), [3, 1, 2], rounds=0)
    assert tr.rounds == 0 and tr.states == [[3, 1, 2]]


def test_pushsum_two_agents_one_round():
    tr = run(make_pushsum(), Model.OUTDEGREE, complete_graph(2), [F(0), F(1)], rounds=1)
    assert tr.outputs[1] == [F(1, 2), F(1, 2)]


def test_converged_examples():
    assert converged([[1, 1], [1, 1]], 1) == 0
    assert converged([[0], [1], [0], [1], [0]], 1) is None
    assert converged([[5], [3], [3]], 3) == 1
    assert converged([[F(1)], [F(1, 2) + F(1, 10**7)]], F(1, 2), EUCLIDEAN, F(1, 10**6)) == 1
    assert converged([[None], [1]], 1) == 1


def port_sender():
    return AlgorithmDescriptor("ports", lambda v: v, lambda q, k: list(range(k)), lambda q, m: q, lambda q: q)


def test_model_discipline():
    flood = corpus.flooding()
    states = [frozenset({1}), frozenset({1, 2})]
    assert check_model_discipline(flood, Model.OUTDEGREE, states)
    assert not check_model_discipline(port_sender(), Model.BROADCAST, [0, 1])
    assert check_model_discipline(corpus.outdegree_weighted(), Model.OUTDEGREE, [(1, F(3))])
    assert not check_model_discipline(port_sender(), Model.OUTDEGREE, [0])
    assert check_model_discipline(port_sender(), Model.PORT, [0])


@pytest.mark.parametrize("name", sorted(corpus.REGISTRY))
def test_deterministic_and_order_free(name):
    alg = corpus.get(name)
    model = Model.PORT if Model.PORT in alg.models and Model.OUTDEGREE not in alg.models else Model.OUTDEGREE
    g = random_strongly_connected(6, 5, self_loops=True).with_canonical_ports()
    inputs = [F(i % 3) for i in range(6)]
    a = run(alg, model, g, inputs, rounds=8)
    b = run(alg, model, g, inputs, rounds=8)
    c = run(alg, model, g, inputs, rounds=8, shuffle_seed=13)
    assert a.states == b.states == c.states


def test_symmetric_indegree_is_outdegree():
    g = random_symmetric(6, 3)
    tr = run(corpus.indegree_history(), Model.SYMMETRIC, g, list(range(6)), rounds=1)
    assert tr.outputs[1] == g.out_degrees()


def test_symmetric_rejects_one_way_links():
    with pytest.raises(ModelError):
        run(corpus.flooding(), Model.SYMMETRIC, directed_ring(3), [1, 2, 3], rounds=2)


def test_port_model_needs_static_colored_graph():
    with pytest.raises(ModelError):
        validate_model(Model.PORT, bidirectional_ring(4).with_ports(None))
    with pytest.raises(ModelError):
        validate_model(Model.PORT, random_dynamic_with_diameter(3, 0, 2))
    with pytest.raises(ModelError):
        validate_model(Model.PORT, bidirectional_ring(4), starts=[1, 2, 1, 1])
    validate_model(Model.PORT, bidirectional_ring(4))


def test_algorithm_model_restriction():
    with pytest.raises(ModelError):
        run(corpus.port_echo(), Model.OUTDEGREE, bidirectional_ring(3), [1, 2, 3], rounds=1)


def test_port_messages_follow_labels():
    g = bidirectional_ring(3)
    tr = run(corpus.port_echo(), Model.PORT, g, [F(1), F(2), F(3)], rounds=1)
    # port 1 goes to the successor, port 2 to the predecessor
    want = []
    for i in range(3):
        q = [F(1), F(2), F(3)]
        succ_of = q[(i - 1) % 3]  # agent i hears its predecessor on port 1
        pred_of = q[(i + 1) % 3]
        want.append((q[i], (q[i] + (succ_of * 1 + 2) + (pred_of * 2 + 2)) % 1_000_003))
    assert tr.states[1] == want


def test_inactive_agents_are_isolated():
    g = complete_graph(2)
    tr = run(corpus.indegree_history(), Model.OUTDEGREE, g, ["a", "b"], rounds=4, starts=[1, 3])
    assert tr.states[2][1] == ("b", ())
    assert tr.states[2][0] == ("a", (1, 1))
    assert tr.states[4][1] == ("b", (2, 2))
    filt = async_filter(g, 2, [1, 3])
    assert sorted(filt.edges) == [(1, 1), (2, 2)]


def test_messages_stay_in_their_round():
    # a descriptor that inspects its inbox count every round
    g = random_dynamic_with_diameter(4, 2, 2)
    tr = run(corpus.indegree_history(), Model.OUTDEGREE, g, [1, 2, 3, 4], rounds=12)
    for t in range(1, 13):
        want = [g.at(t).in_degree(v) for v in range(1, g.n + 1)]
        assert [s[1][t - 1] for s in tr.states[t]] == want


def test_init_override_and_bad_arguments():
    g = directed_ring(3)
    tr = run(corpus.min_propagation(), Model.BROADCAST, g, None, rounds=3, init_override=[F(9), F(4), F(7)])
    assert tr.outputs[-1] == [F(4)] * 3
    with pytest.raises(ValueError):
        run(corpus.flooding(), Model.BROADCAST, g, [1], rounds=1)
    with pytest.raises(ValueError):
        run(corpus.flooding(), Model.BROADCAST, g, [1, 2, 3], rounds=-1)
    with pytest.raises(ValueError):
        run(corpus.flooding(), Model.BROADCAST, g, [1, 2, 3], rounds=1, starts=[0, 1, 1])


def test_round_records():
    tr = run(corpus.min_propagation(), Model.BROADCAST, directed_ring(2), [F(2), F(1)], rounds=1)
    assert isinstance(tr, ExecutionTrace)
    assert tr.round_records() == [{"round": 0, "outputs": ["2", "1"]}, {"round": 1, "outputs": ["1", "1"]}]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(0, 6))
def test_replay_from_mid_trace(seed, n, cut):
    g = random_strongly_connected(n, seed % 97, self_loops=True)
    rng = random.Random(seed)
    inputs = [F(rng.randint(0, 9)) for _ in range(n)]
    for alg in (corpus.sum_received(), make_pushsum()):
        full = run(alg, Model.OUTDEGREE, g, inputs, rounds=6)
        rest = run(alg, Model.OUTDEGREE, g, None, rounds=6 - cut, init_override=full.states[cut])
        assert rest.states == full.states[cut:]
