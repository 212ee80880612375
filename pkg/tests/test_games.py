import math

import pytest

from klss import MINUS, PLUS, TERMINAL
from klss.equilibrium import game_value
from klss.errors import UnknownGame
from klss.games import CATALOG, make_game

SMALL = ["kuhn", "goofspiel4-inc", "dark-hex-2x2", "mp-100"]


def test_unknown_game_raises():
    with pytest.raises(UnknownGame):
        make_game("chess")
    with pytest.raises(UnknownGame):
        make_game("mp-x")


def test_catalog_names_build():
    for name in CATALOG:
        assert make_game(name).tree.num_nodes > 0


@pytest.mark.parametrize("name", SMALL + ["mp-7", "hidden-mp-10"])
def test_rewards_in_unit_interval(name):
    g = make_game(name)
    t = g.tree
    us = [t.utility[h] for h in range(t.num_nodes) if t.owner[h] == TERMINAL]
    assert min(us) >= -1.0 and max(us) <= 1.0
    assert max(abs(u) for u in us) > 0.0


def test_rewards_in_unit_interval_large():
    for name in ("leduc3", "liars-dice5"):
        g = make_game(name)
        t = g.tree
        us = [t.utility[h] for h in range(t.num_nodes)
              if t.owner[h] == TERMINAL]
        assert min(us) >= -1.0 and max(us) <= 1.0


def test_matching_pennies_family_structure():
    # N rounds: one plus move per round, each hidden from minus until the end
    for n in (2, 5, 10):
        g = make_game(f"mp-{n}")
        assert g.tree.num_nodes == 7 * n + 1
        assert len(g.index.infosets[PLUS]) + len(g.index.infosets[MINUS]) \
            == n + 1


def test_hidden_mp_value_is_zero():
    # the counterexample family is symmetric matching pennies under nature
    g = make_game("hidden-mp-10")
    assert game_value(g) == pytest.approx(0.0, abs=1e-8)


def test_kuhn_value():
    # Kuhn poker's value is -1/18 for the first player, here rescaled by
    # the 2-chip maximum pot
    g = make_game("kuhn")
    assert game_value(g) == pytest.approx(-1.0 / 36.0, abs=1e-8)


def test_fig1_structure(fig1):
    keys = {I.key for I in fig1.index.infosets[PLUS]}
    assert (("o", "start"), ("o", "R1")) in keys
    assert (("o", "start"), ("o", "R3")) in keys


def test_goofspiel_increasing_is_deterministic_nature():
    g = make_game("goofspiel4-inc")
    t = g.tree
    for h in range(t.num_nodes):
        if t.nature_probs[h] is not None:
            assert t.nature_probs[h] == [1.0]


def test_chance_reach_consistency():
    g = make_game("kuhn")
    t = g.tree
    for h in range(t.num_nodes):
        for i, c in enumerate(t.children[h]):
            w = t.nature_probs[h][i] if t.nature_probs[h] is not None else 1.0
            assert t.chance_reach[c] == pytest.approx(
                t.chance_reach[h] * w, abs=1e-15)
    # total leaf probability is 1 under any strategy profile
    from klss import uniform_strategy
    x = uniform_strategy(g, PLUS)
    y = uniform_strategy(g, MINUS)
    idx = g.index
    mass = sum(t.chance_reach[h]
               * x.values[idx.node_seq[PLUS][h]]
               * y.values[idx.node_seq[MINUS][h]]
               for h in range(t.num_nodes) if t.owner[h] == TERMINAL)
    assert math.isclose(mass, 1.0, abs_tol=1e-12)
