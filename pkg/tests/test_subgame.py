import math

import numpy as np
import pytest

from klss import (
    EMPTY_SEQ,
    MINUS,
    PLUS,
    behavior_to_sequence,
    sequence_to_behavior,
    uniform_strategy,
    validate_strategy,
)
from klss.equilibrium import (
    best_response,
    counterfactual_values,
    exploitability,
    game_value,
    solve_margin_tiebreak,
)
from klss.errors import BadOrder, UnreachableInfoset, WrongKind
from klss.games import make_game
from klss.harness import epsilon_uniform_blueprint
from klss.subgame import (
    _source_plus_key,
    compose_strategy,
    make_subgame,
    margins,
    maxmargin_to_resolve,
    resolve_to_maxmargin,
    transposition_key,
)

R1 = (("o", "start"), ("o", "R1"))


@pytest.fixture(scope="module")
def fig1_bp():
    g = make_game("fig1")
    return g, uniform_strategy(g, PLUS)


@pytest.fixture(scope="module")
def kuhn_bp():
    g = make_game("kuhn")
    return g, epsilon_uniform_blueprint(g, 0.25)


def _map_blueprint(gg, bp):
    """Blueprint behavior expressed on the gadget's plus infosets."""
    src_beh = sequence_to_behavior(gg.source, bp)
    beh = {}
    for I in gg.game.index.infosets[PLUS]:
        key = _source_plus_key(gg, I.key)
        if key is None:
            continue
        src_I = gg.source.index.infoset_by_key(PLUS, key)
        if src_I is None:
            continue
        beh[I.index] = np.array(
            [src_beh[src_I.index][src_I.actions.index(a)]
             for a in I.actions])
    return behavior_to_sequence(gg.game, PLUS, beh)


def test_bad_order_rejected(fig1_bp):
    g, bp = fig1_bp
    for k in (0, 2, -1, 1.5):
        with pytest.raises(BadOrder):
            make_subgame(g, bp, R1, k)
    with pytest.raises(BadOrder):
        make_subgame(g, bp, R1, 3, {"MergeTranspositions"})


def test_unreachable_infoset_rejected(fig1_bp):
    g, _ = fig1_bp
    with pytest.raises(UnreachableInfoset):
        make_subgame(g, uniform_strategy(g, PLUS), (("o", "nope"),), 1)
    # a blueprint that never plays into the infoset
    beh = {}
    # kuhn: make plus fold everywhere it can, then pick a dead infoset
    ku = make_game("kuhn")
    for I in ku.index.infosets[PLUS]:
        b = np.zeros(len(I.actions))
        b[0] = 1.0
        beh[I.index] = b
    x = behavior_to_sequence(ku, PLUS, beh)
    dead = [I for I in ku.index.infosets[PLUS]
            if x.values[I.parent_seq] <= 0.0]
    if dead:
        with pytest.raises(UnreachableInfoset):
            make_subgame(ku, x, dead[0], 1)


@pytest.mark.parametrize("k", [1, math.inf])
def test_branch_invariants(fig1_bp, k):
    g, bp = fig1_bp
    gg = make_subgame(g, bp, R1, k)
    assert gg.branches
    for b in gg.branches:
        assert b.mass > 0.0
        assert abs(sum(b.probs) - 1.0) <= 1e-12
        assert min(b.probs) > 0.0
        assert len(b.probs) == len(b.members)
    # every payoff-row entry sits on the empty plus sequence
    for (s, t), v in gg.game.addends.entries.items():
        assert s == EMPTY_SEQ


@pytest.mark.parametrize("k", [1, math.inf])
def test_blueprint_margins_are_zero_in_gadget(fig1_bp, k):
    # mapping the blueprint into the maxmargin gadget must give value 0 on
    # every branch: the payoff row subtracts exactly the class's alternate
    # value, and the fold-ins restore the out-of-scope payoff mass
    g, bp = fig1_bp
    gg = make_subgame(g, bp, R1, k)
    x = _map_blueprint(gg, bp)
    table = counterfactual_values(gg.game, gg.game.addends, x)
    root = [I for I in gg.game.index.infosets[MINUS]
            if I.parent_seq == EMPTY_SEQ]
    assert len(root) == 1
    for a_i in range(len(root[0].actions)):
        assert table.seq_value[(root[0].index, a_i)] == pytest.approx(
            0.0, abs=1e-9)


def test_blueprint_margins_are_zero_in_gadget_kuhn(kuhn_bp):
    g, bp = kuhn_bp
    for I in g.index.infosets[PLUS][:4]:
        gg = make_subgame(g, bp, I, 1)
        x = _map_blueprint(gg, bp)
        table = counterfactual_values(gg.game, gg.game.addends, x)
        root = [J for J in gg.game.index.infosets[MINUS]
                if J.parent_seq == EMPTY_SEQ][0]
        for a_i in range(len(root.actions)):
            assert table.seq_value[(root.index, a_i)] == pytest.approx(
                0.0, abs=1e-9)


def test_gadget_value_equals_min_margin(fig1_bp):
    g, bp = fig1_bp
    gg = make_subgame(g, bp, R1, 1)
    gx = solve_margin_tiebreak(gg.game, gg.game.addends)
    v = game_value(gg.game)
    x_new = compose_strategy(gg, gx, bp)
    validate_strategy(g, x_new)
    ms = margins(g, x_new, bp, R1, 1)
    # gadget branch payoffs are normalized per unit of branch mass D, so
    # the gadget's value is the smallest margin rescaled by mass/D
    scaled = {b.class_key: ms[b.class_key] * b.alt_row / b.alt
              if b.alt else ms[b.class_key] for b in gg.branches}
    assert min(scaled.values()) == pytest.approx(v, abs=1e-7)


def test_margins_nonnegative_after_solve(kuhn_bp):
    g, bp = kuhn_bp
    for I in g.index.infosets[PLUS][:4]:
        gg = make_subgame(g, bp, I, 1)
        gx = solve_margin_tiebreak(gg.game, gg.game.addends)
        x_new = compose_strategy(gg, gx, bp)
        for key, m in margins(g, x_new, bp, I, 1).items():
            assert m >= -1e-8


def test_compose_preserves_untouched_infosets(kuhn_bp):
    g, bp = kuhn_bp
    I0 = g.index.infosets[PLUS][0]
    gg = make_subgame(g, bp, I0, 1)
    gx = solve_margin_tiebreak(gg.game, gg.game.addends)
    x_new = compose_strategy(gg, gx, bp)
    validate_strategy(g, x_new)
    touched = set()
    for J in gg.game.index.infosets[PLUS]:
        key = _source_plus_key(gg, J.key)
        if key is not None:
            src = g.index.infoset_by_key(PLUS, key)
            if src is not None:
                touched.add(src.index)
    old = sequence_to_behavior(g, bp)
    new = sequence_to_behavior(g, x_new)
    for I in g.index.infosets[PLUS]:
        if I.index not in touched and x_new.values[I.parent_seq] > 1e-12:
            assert np.allclose(old[I.index], new[I.index], atol=1e-9)


def test_composed_no_worse_than_blueprint(kuhn_bp):
    g, bp = kuhn_bp
    before = exploitability(g, bp)
    I0 = g.index.infosets[PLUS][0]
    gg = make_subgame(g, bp, I0, 1)
    gx = solve_margin_tiebreak(gg.game, gg.game.addends)
    x_new = compose_strategy(gg, gx, bp)
    assert exploitability(g, x_new) <= before + 1e-8


def test_reach_option_only_loosens_alternate_values(kuhn_bp):
    g, bp = kuhn_bp
    I0 = g.index.infosets[PLUS][0]
    plain = make_subgame(g, bp, I0, 1)
    reach = make_subgame(g, bp, I0, 1, {"Reach"})
    by_key = {b.class_key: b for b in plain.branches}
    for b in reach.branches:
        assert b.alt <= by_key[b.class_key].alt + 1e-12


def test_resolve_roundtrip(fig1_bp):
    g, bp = fig1_bp
    gg = make_subgame(g, bp, R1, 1)
    rs = maxmargin_to_resolve(gg)
    assert rs.kind == "resolve"
    with pytest.raises(WrongKind):
        maxmargin_to_resolve(rs)
    back = resolve_to_maxmargin(rs)
    assert back.kind == "maxmargin"
    assert back.game.tree.num_nodes == gg.game.tree.num_nodes
    a = sorted(gg.game.addends.entries.items())
    b = sorted(back.game.addends.entries.items())
    assert len(a) == len(b)
    for (ka, va), (kb, vb) in zip(a, b):
        assert ka == kb and va == pytest.approx(vb, abs=1e-12)


def test_resolve_value_scaling(fig1_bp):
    # with a uniform nature root over N branches, the resolve gadget's
    # value is the mean of per-branch exit values; solving it still yields
    # nonnegative margins
    g, bp = fig1_bp
    gg = make_subgame(g, bp, R1, 1)
    rs = maxmargin_to_resolve(gg)
    x, _, _ = __import__("klss.equilibrium", fromlist=["solve"]).solve(
        rs.game, rs.game.addends)
    x_new = compose_strategy(rs, x, bp)
    for m in margins(g, x_new, bp, R1, 1).values():
        assert m >= -1e-8


def test_transposition_merging_reduces_branches():
    g = make_game("goofspiel4-inc")
    bp = epsilon_uniform_blueprint(g, 0.25)
    merged_any = False
    for I in g.index.infosets[PLUS]:
        if bp.values[I.parent_seq] <= 0.0:
            continue
        plain = make_subgame(g, bp, I, 1)
        merged = make_subgame(g, bp, I, 1, {"MergeTranspositions"})
        assert len(merged.branches) <= len(plain.branches)
        if len(merged.branches) < len(plain.branches):
            merged_any = True
            for b in merged.branches:
                keys = {transposition_key(g, h) for h in b.members}
                assert len(keys) == 1
        if merged_any:
            break
    assert merged_any
