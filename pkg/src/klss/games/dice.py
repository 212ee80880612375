"""Liar's dice with one die per player."""

from ..errors import BadParameter
from ..tree import build_game


def liars_dice(faces: int = 5):
    """Each player rolls one `faces`-sided die, then players alternate claims.

    A claim (q, f) asserts that at least q of the two dice show face f;
    the highest face is wild and counts toward any claim.  Claims are
    ordered by quantity then face and must strictly increase.
    Instead of raising, a player may call liar: if the last claim holds, the
    claimant wins, otherwise the caller wins.  After the highest claim the
    only move is to call.  Payoffs are +1/-1 for plus.
    """
    if faces < 2:
        raise BadParameter("liars_dice requires faces >= 2")
    # claim index b (0-based) encodes quantity 1 + b // faces, face 1 + b % faces
    n_claims = 2 * faces

    def claim_holds(b, d1, d2):
        q, f = 1 + b // faces, 1 + b % faces
        return (d1 in (f, faces)) + (d2 in (f, faces)) >= q

    def bet_node(d1, d2, last, to_act, minus_tag="wait"):
        me = "plus" if to_act == 0 else "minus"
        heard = "open" if last is None else f"heard{last}"
        acts = {}
        for b in range((last + 1) if last is not None else 0, n_claims):
            acts[f"claim{b}"] = bet_node(d1, d2, b, 1 - to_act)
        if last is not None:
            claimant_wins = claim_holds(last, d1, d2)
            # the claimant is the previous mover
            plus_wins = claimant_wins if to_act == 1 else not claimant_wins
            acts["liar"] = {"player": "terminal",
                            "utility": 1.0 if plus_wins else -1.0}
        return {
            "player": me,
            "obs_plus": heard if to_act == 0 else "wait",
            "obs_minus": heard if to_act == 1 else minus_tag,
            "actions": acts,
        }

    desc = {
        "player": "nature",
        "obs_plus": "roll",
        "obs_minus": "roll",
        "probs": {str(d): 1.0 / faces for d in range(1, faces + 1)},
        "actions": {
            str(d1): {
                "player": "nature",
                "obs_plus": f"die{d1}",
                "obs_minus": "roll2",
                "probs": {str(d): 1.0 / faces for d in range(1, faces + 1)},
                "actions": {
                    str(d2): bet_node(d1, d2, None, 0, minus_tag=f"die{d2}")
                    for d2 in range(1, faces + 1)
                },
            }
            for d1 in range(1, faces + 1)
        },
    }
    return build_game(desc, name=f"liars-dice{faces}")
