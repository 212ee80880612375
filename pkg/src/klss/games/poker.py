"""Kuhn poker and limit Leduc poker with sequential card dealing."""

from ..errors import BadParameter
from ..tree import build_game

_KUHN_CARDS = ["J", "Q", "K"]


def kuhn():
    """Three-card Kuhn poker, rewards divided by 2.

    Both players ante 1.  Plus may check or bet 1; a bet may be called or
    folded; after a check, minus may check (showdown for 1) or bet (plus
    calls or folds).  Higher card wins showdowns.
    """

    def showdown(c1, c2, stake):
        win = _KUHN_CARDS.index(c1) > _KUHN_CARDS.index(c2)
        return {"player": "terminal", "utility": (stake if win else -stake) / 2.0}

    def deal(c1, c2):
        return {
            "player": "plus",
            "obs_plus": "go",
            "obs_minus": c2,
            "actions": {
                "check": {
                    "player": "minus",
                    "obs_plus": "opp",
                    "obs_minus": "after-check",
                    "actions": {
                        "check": showdown(c1, c2, 1),
                        "bet": {
                            "player": "plus",
                            "obs_plus": "facing-bet",
                            "obs_minus": "opp",
                            "actions": {
                                "call": showdown(c1, c2, 2),
                                "fold": {"player": "terminal", "utility": -1 / 2.0},
                            },
                        },
                    },
                },
                "bet": {
                    "player": "minus",
                    "obs_plus": "opp",
                    "obs_minus": "after-bet",
                    "actions": {
                        "call": showdown(c1, c2, 2),
                        "fold": {"player": "terminal", "utility": 1 / 2.0},
                    },
                },
            },
        }

    desc = {
        "player": "nature",
        "obs_plus": "deal",
        "obs_minus": "deal",
        "probs": {c: 1 / 3 for c in _KUHN_CARDS},
        "actions": {
            c1: {
                "player": "nature",
                "obs_plus": c1,
                "obs_minus": "deal2",
                "probs": {c2: 1 / 2 for c2 in _KUHN_CARDS if c2 != c1},
                "actions": {
                    c2: deal(c1, c2) for c2 in _KUHN_CARDS if c2 != c1
                },
            }
            for c1 in _KUHN_CARDS
        },
    }
    return build_game(desc, name="kuhn")


def leduc(ranks: int = 3):
    """Two-suit limit Leduc hold'em.

    A deck of `ranks` ranks in two suits.  Each player antes 1 and gets one
    private card; one community card is dealt between two betting rounds.
    Raises are fixed at 2 in round one and 4 in round two, with a two-raise
    cap per round.  A pair with the community card beats everything else,
    otherwise higher rank wins.  Rewards are scaled into [-1, 1] by the
    maximum possible loss.
    """
    if ranks < 2:
        raise BadParameter("leduc requires ranks >= 2")
    deck = [f"{r}{s}" for r in range(ranks) for s in "ab"]
    max_loss = 1 + 2 * 2 + 2 * 4

    def rank(card):
        return int(card[:-1])

    def winner(c1, c2, board):
        """+1 plus wins, -1 minus wins, 0 split."""
        p1, p2 = rank(c1) == rank(board), rank(c2) == rank(board)
        if p1 or p2:
            return 1 if p1 else -1
        if rank(c1) == rank(c2):
            return 0
        return 1 if rank(c1) > rank(c2) else -1

    def terminal(u):
        return {"player": "terminal", "utility": u / max_loss}

    def betting_round(pot, to_act, raises_left, raise_size, outstanding,
                      on_fold, on_done, prefix, minus_tag=""):
        """One betting position; `pot` is each player's committed total.

        `on_done(pot)` continues the game after the round closes with both
        players alive; `on_fold(player, pot)` settles a fold by `player`.
        `prefix` disambiguates the observation labels of the two rounds;
        `minus_tag` injects minus's private card at the opening node.
        """
        me, opp = to_act, 1 - to_act
        acts = {}
        if outstanding:
            acts["call"] = lambda: on_done((max(pot),) * 2)
            acts["fold"] = lambda: on_fold(me, pot)
        else:
            acts["call"] = lambda: (
                on_done(pot) if me == 1 else betting_round(
                    pot, opp, raises_left, raise_size, False,
                    on_fold, on_done, prefix + "c")
            )
        if raises_left:
            def raised():
                new_pot = (pot[0] + (pot[1] - pot[0]) + raise_size,
                           pot[1]) if me == 0 else (
                    pot[0], pot[1] + (pot[0] - pot[1]) + raise_size)
                return betting_round(new_pot, opp, raises_left - 1, raise_size,
                                     True, on_fold, on_done, prefix + "r")
            acts["raise"] = raised

        return {
            "player": "plus" if me == 0 else "minus",
            "obs_plus": ("b:" if me == 0 else "o:") + prefix,
            "obs_minus": ("b:" if me == 1 else "o:") + prefix + minus_tag,
            "actions": {a: f() for a, f in acts.items()},
        }

    def second_round(c1, c2, pot):
        remaining = [c for c in deck if c not in (c1, c2)]

        def with_board(board):
            def on_fold(player, p):
                committed = p[player]
                return terminal(-committed if player == 0 else committed)

            def on_done(p):
                w = winner(c1, c2, board)
                return terminal(w * p[0] if w <= 0 else w * p[1])

            return betting_round(pot, 0, 2, 4, False, on_fold, on_done,
                                 "r2." + board)

        return {
            "player": "nature",
            "obs_plus": "board",
            "obs_minus": "board",
            "probs": {b: 1 / len(remaining) for b in remaining},
            "actions": {b: with_board(b) for b in remaining},
        }

    def first_round(c1, c2):
        def on_fold(player, p):
            committed = p[player]
            return terminal(-committed if player == 0 else committed)

        def on_done(p):
            return second_round(c1, c2, p)

        return betting_round((1, 1), 0, 2, 2, False, on_fold, on_done, "r1",
                             minus_tag="." + c2)

    desc = {
        "player": "nature",
        "obs_plus": "deal",
        "obs_minus": "deal",
        "probs": {c: 1 / len(deck) for c in deck},
        "actions": {
            c1: {
                "player": "nature",
                "obs_plus": c1,
                "obs_minus": "deal2",
                "probs": {c2: 1 / (len(deck) - 1) for c2 in deck if c2 != c1},
                "actions": {c2: first_round(c1, c2) for c2 in deck if c2 != c1},
            }
            for c1 in deck
        },
    }
    return build_game(desc, name=f"leduc{ranks}")
