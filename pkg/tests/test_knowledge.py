import math

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klss import MINUS, PLUS
from klss.errors import EmptySet
from klss.games import make_game
from klss.knowledge import (
    collapsed_graph,
    color_graph,
    common_knowledge_closure,
    hypergraph_diameter,
    independent_set_plan,
    infoset_knowledge_set,
    knowledge_set,
)


def _decision_nodes(g):
    return [h for h in range(g.tree.num_nodes)
            if g.tree.owner[h] in (PLUS, MINUS)]


def test_empty_seed_raises(kuhn):
    with pytest.raises(EmptySet):
        knowledge_set(kuhn, [], 1)
    with pytest.raises(EmptySet):
        knowledge_set(kuhn, [1], 0)
    with pytest.raises(EmptySet):
        knowledge_set(kuhn, [1], 1.5)


@given(st.integers(0, 10 ** 6), st.sampled_from(["kuhn", "mp-10", "fig1"]))
@settings(max_examples=40, deadline=None)
def test_knowledge_chain_monotone(seed, name):
    import numpy as np
    g = make_game(name)
    rng = np.random.default_rng(seed)
    nodes = _decision_nodes(g)
    S = set(rng.choice(nodes, size=rng.integers(1, 4), replace=True).tolist())
    prev = frozenset(S)
    closure = common_knowledge_closure(g, S).members
    for k in range(1, 6):
        cur = knowledge_set(g, S, k).members
        assert prev <= cur <= closure
        prev = cur
    assert knowledge_set(g, S, math.inf).members == closure


def test_closure_idempotent(kuhn):
    for h in _decision_nodes(kuhn)[:6]:
        c1 = common_knowledge_closure(kuhn, [h]).members
        c2 = common_knowledge_closure(kuhn, c1).members
        assert c1 == c2


def test_knowledge_set_saturates_at_closure(kuhn):
    # once two consecutive orders agree, all later orders agree too
    h = _decision_nodes(kuhn)[0]
    sizes = [len(knowledge_set(kuhn, [h], k)) for k in range(1, 10)]
    closure = len(common_knowledge_closure(kuhn, [h]))
    assert sizes == sorted(sizes)
    assert sizes[-1] == closure


def test_infoset_knowledge_set_contains_infoset(kuhn):
    for I in kuhn.index.infosets[PLUS]:
        ks = infoset_knowledge_set(kuhn, PLUS, I.index, 1)
        assert set(I.members) <= set(ks.members)


@pytest.mark.parametrize("name,diam", [
    ("kuhn", 3), ("mp-100", 99), ("dark-hex-2x2", 13), ("liars-dice5", 2)])
def test_diameter(name, diam):
    assert hypergraph_diameter(make_game(name)) == diam


def test_coloring_is_proper(kuhn):
    cg = collapsed_graph(kuhn)
    col = color_graph(cg.graph)
    for u, v in cg.graph.edges:
        assert col[u] != col[v]


def test_exact_coloring_is_optimal():
    # an odd cycle needs 3 colors; the exact branch must find them
    g = nx.cycle_graph(5)
    col = color_graph(g, exact_limit=12)
    assert max(col.values()) + 1 == 3
    for u, v in g.edges:
        assert col[u] != col[v]


def test_independent_set_plan_samples_independent_sets(kuhn):
    import numpy as np
    plan = independent_set_plan(kuhn)
    for seed in range(10):
        chosen = set(plan.sample(np.random.default_rng(seed)))
        for u in chosen:
            for v in chosen:
                if u != v:
                    assert not plan.cg.graph.has_edge(u, v)


def test_independent_set_plan_is_ancestor_closed(kuhn):
    # every chosen infoset's plus-ancestors are also chosen
    import numpy as np
    plan = independent_set_plan(kuhn)
    for seed in range(10):
        chosen = set(plan.sample(np.random.default_rng(seed)))
        for i in chosen:
            assert all(a in chosen for a in plan.ancestors(i))


def test_independent_set_probability_matches_sampling(kuhn):
    import numpy as np
    plan = independent_set_plan(kuhn)
    n = 4000
    counts = {i: 0 for i in plan.coloring}
    rng = np.random.default_rng(0)
    for _ in range(n):
        for i in plan.sample(rng):
            counts[i] += 1
    for i, c in counts.items():
        assert abs(c / n - plan.probability(i)) < 0.05
