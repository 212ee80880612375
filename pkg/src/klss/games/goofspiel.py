"""k-card Goofspiel with win/lose/tie observations."""

from ..errors import BadParameter
from ..tree import build_game


def goofspiel(cards: int = 4, order: str = "increasing"):
    """Bidding game over prizes 1..cards, each bid used exactly once.

    Players bid simultaneously (plus moves first, hidden from minus); the
    higher bid takes the prize and ties split it.  Players learn only who
    won each round.  In the `random` variant nature reveals a uniformly
    random unused prize before each round; in `increasing` the prize at
    round t is t.  The final round is forced and folded into the terminal.
    Utility is +1/-1 for the higher/lower total score and 0 for a tie.
    """
    if cards < 2:
        raise BadParameter("goofspiel requires cards >= 2")
    if order not in ("random", "increasing"):
        raise BadParameter(f"unknown order {order!r}")

    def outcome(bp, bm):
        return "w" if bp > bm else ("l" if bp < bm else "t")

    def score(prize, bp, bm):
        if bp > bm:
            return prize
        if bp < bm:
            return -prize
        return 0.0

    def play(hand_p, hand_m, prizes_left, diff, last_p, last_m):
        """Subtree before a round; `last_*` are the previous round outcomes."""
        if len(hand_p) == 1:
            # forced final bids; in the random variant the last prize is
            # also determined
            final = diff
            for prize in prizes_left:
                final += score(prize, hand_p[0], hand_m[0])
            result = (final > 0) - (final < 0)
            return {"player": "terminal", "utility": float(result)}
        if order == "random":
            return {
                "player": "nature",
                "obs_plus": f"ch|{last_p}",
                "obs_minus": f"ch|{last_m}",
                "probs": {str(v): 1.0 / len(prizes_left) for v in prizes_left},
                "actions": {
                    str(v): round_subtree(hand_p, hand_m,
                                          tuple(p for p in prizes_left if p != v),
                                          v, diff, last_p, last_m)
                    for v in prizes_left
                },
            }
        v = prizes_left[0]
        return round_subtree(hand_p, hand_m, prizes_left[1:], v, diff,
                             last_p, last_m)

    def round_subtree(hand_p, hand_m, rest, prize, diff, last_p, last_m):
        return {
            "player": "plus",
            "obs_plus": f"bid|v{prize}|{last_p}",
            "obs_minus": f"see|v{prize}|{last_m}",
            "actions": {
                str(bp): {
                    "player": "minus",
                    "obs_plus": "wait",
                    "obs_minus": f"bid|v{prize}|{last_m}",
                    "actions": {
                        str(bm): play(
                            tuple(b for b in hand_p if b != bp),
                            tuple(b for b in hand_m if b != bm),
                            rest,
                            diff + score(prize, bp, bm),
                            outcome(bp, bm),
                            outcome(bm, bp),
                        )
                        for bm in hand_m
                    },
                }
                for bp in hand_p
            },
        }

    hand = tuple(range(1, cards + 1))
    desc = play(hand, hand, hand, 0.0, "-", "-")
    suffix = "random" if order == "random" else "inc"
    return build_game(desc, name=f"goofspiel{cards}-{suffix}")
