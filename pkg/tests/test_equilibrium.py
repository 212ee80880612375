import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klss import (
    MINUS,
    PLUS,
    behavior_to_sequence,
    expected_value,
    uniform_strategy,
)
from klss.equilibrium import (
    SolverConfig,
    action_floors,
    best_response,
    class_cbv,
    counterfactual_values,
    exploitability,
    game_value,
    sample_equilibria,
    solve,
    solve_margin_tiebreak,
    uniform_floors,
)
from klss.errors import BadParameter
from klss.games import make_game


def _pure_strategies(g, player):
    """All pure behavior profiles of one player (small games only)."""
    infosets = g.index.infosets[player]
    choices = [range(len(I.actions)) for I in infosets]
    for combo in itertools.product(*choices):
        beh = {}
        for I, a in zip(infosets, combo):
            b = np.zeros(len(I.actions))
            b[a] = 1.0
            beh[I.index] = b
        yield behavior_to_sequence(g, player, beh)


def test_config_rejects_bad_parameters():
    with pytest.raises(BadParameter):
        SolverConfig(tolerance=0.0)
    with pytest.raises(BadParameter):
        SolverConfig(epsilon_plus=1.5)
    with pytest.raises(BadParameter):
        SolverConfig(engine="simplex")
    with pytest.raises(BadParameter):
        SolverConfig(cbv_orientation="avg")


@given(st.integers(0, 10 ** 6), st.sampled_from(["fig1", "mp-2"]),
       st.integers(0, 1))
@settings(max_examples=20, deadline=None)
def test_best_response_matches_pure_enumeration(seed, name, responder):
    g = make_game(name)
    rng = np.random.default_rng(seed)
    opp_player = 1 - responder
    beh = {I.index: rng.dirichlet(np.ones(len(I.actions)))
           for I in g.index.infosets[opp_player]}
    opp = behavior_to_sequence(g, opp_player, beh)
    _, v = best_response(g, None, opp, responder)
    pick = max if responder == PLUS else min
    vals = []
    for pure in _pure_strategies(g, responder):
        if responder == PLUS:
            vals.append(expected_value(g, None, pure, opp))
        else:
            vals.append(expected_value(g, None, opp, pure))
    assert v == pytest.approx(pick(vals), abs=1e-10)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_exploitability_nonnegative(seed):
    g = make_game("kuhn")
    rng = np.random.default_rng(seed)
    beh = {I.index: rng.dirichlet(np.ones(len(I.actions)))
           for I in g.index.infosets[PLUS]}
    x = behavior_to_sequence(g, PLUS, beh)
    assert exploitability(g, x) >= -1e-12


@pytest.mark.parametrize("name", ["kuhn", "fig1", "mp-10", "dark-hex-2x2"])
def test_solve_is_certified_optimal(name):
    g = make_game(name)
    x, y, gaps = solve(g, None)
    v = game_value(g)
    assert gaps[0] <= 1e-6
    assert exploitability(g, x) <= 1e-6
    _, vy = best_response(g, None, y, PLUS)
    assert vy <= v + 1e-6


def test_uniform_floor_strategy_is_floored(kuhn):
    eps = 0.25
    floors = (uniform_floors(kuhn, PLUS, eps), [])
    x = solve(kuhn, None, floors=floors)[0]
    from klss import sequence_to_behavior
    beh = sequence_to_behavior(kuhn, x)
    for I in kuhn.index.infosets[PLUS]:
        if x.values[I.parent_seq] > 1e-12:
            m = len(I.actions)
            assert beh[I.index].min() >= eps / m - 1e-9


def test_action_floor_strategy_floors_one_label(kuhn):
    eps = 0.25
    floors = (action_floors(kuhn, PLUS, eps, "bet"), [])
    x = solve(kuhn, None, floors=floors)[0]
    from klss import sequence_to_behavior
    beh = sequence_to_behavior(kuhn, x)
    for I in kuhn.index.infosets[PLUS]:
        if "bet" in I.actions and x.values[I.parent_seq] > 1e-12:
            m = len(I.actions)
            assert beh[I.index][I.actions.index("bet")] >= eps / m - 1e-9


def test_counterfactual_values_agree_with_best_response(kuhn):
    x = uniform_strategy(kuhn, PLUS)
    table = counterfactual_values(kuhn, None, x)
    _, v = best_response(kuhn, None, x, MINUS)
    # minus's root value equals mass-weighted infoset values at the top
    # decision layer
    idx = kuhn.index
    top = [I for I in idx.infosets[MINUS] if I.parent_seq == 0]
    total = sum(table.mass[I.index] * table.infoset_value[I.index]
                for I in top if table.defined(I.index))
    assert total == pytest.approx(v, abs=1e-10)


@pytest.mark.parametrize("name", ["kuhn", "fig1"])
def test_class_cbv_at_root_equals_best_response(name, request):
    # the root observation class covers the whole game, so its value is
    # minus's unrestricted best-response value and its mass is 1
    g = request.getfixturevalue(name) if name != "fig1" else make_game(name)
    x = uniform_strategy(g, PLUS)
    ci = g.index.class_of[MINUS][g.tree.root]
    mass, alt = class_cbv(g, None, x, ci)
    _, v = best_response(g, None, x, MINUS)
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert alt == pytest.approx(v, abs=1e-10)


def test_class_cbv_orientation_ordering(kuhn):
    x = uniform_strategy(kuhn, PLUS)
    for ci in range(len(kuhn.index.classes[MINUS])):
        mass, lo = class_cbv(kuhn, None, x, ci, "min")
        if mass <= 0.0:
            continue
        _, hi = class_cbv(kuhn, None, x, ci, "max")
        assert lo <= hi + 1e-12


def test_margin_tiebreak_is_still_optimal(fig1):
    # the tie-break applies to entry-choice games: a single minus root
    # infoset picking a branch; its chosen strategy keeps the maxmin value
    from klss.subgame import make_subgame
    bp = uniform_strategy(fig1, PLUS)
    gg = make_subgame(fig1, bp, (("o", "start"), ("o", "R1")), 1)
    x = solve_margin_tiebreak(gg.game, gg.game.addends)
    v = game_value(gg.game)
    _, vx = best_response(gg.game, gg.game.addends, x, MINUS)
    assert vx == pytest.approx(v, abs=1e-7)


def test_margin_tiebreak_rejects_general_root(fig1):
    with pytest.raises(BadParameter):
        solve_margin_tiebreak(fig1, None)


def test_sample_equilibria_are_optimal(kuhn):
    ys = sample_equilibria(kuhn, 5, seed=3)
    v = game_value(kuhn)
    for y in ys:
        _, vy = best_response(kuhn, None, y, PLUS)
        assert vy <= v + 1e-6


def test_cfr_engine_agrees_with_lp():
    g = make_game("mp-2")
    cfg = SolverConfig(engine="cfr+", tolerance=1e-4, max_iters=20000)
    x, y, gaps = solve(g, None, cfg)
    assert exploitability(g, x) <= 1e-3
    assert abs(game_value(g) - game_value(g, 1e-9)) <= 1e-12
