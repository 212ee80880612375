"""Abrupt dark hex on a 2x2 board."""

from ..errors import BadParameter
from ..tree import build_game

# hex adjacency of the 2x2 rhombus with cells 0=(0,0), 1=(0,1), 2=(1,0), 3=(1,1)
_ADJ = {0: {1, 2}, 1: {0, 2, 3}, 2: {0, 1, 3}, 3: {1, 2}}
# plus ("x") connects the left edge to the right edge; minus ("o") the top
# edge to the bottom edge
_EDGES = {0: ({0, 2}, {1, 3}), 1: ({0, 1}, {2, 3})}


def _wins(cells: frozenset, player: int) -> bool:
    start, goal = _EDGES[player]
    frontier = set(cells & start)
    seen = set(frontier)
    while frontier:
        c = frontier.pop()
        if c in goal:
            return True
        for d in _ADJ[c] - seen:
            if d in cells:
                seen.add(d)
                frontier.add(d)
    return False


def abrupt_dark_hex(rows: int = 2, cols: int = 2):
    """Hex where moves are hidden and a blocked attempt forfeits the turn.

    Players alternately pick a cell they have not yet tried.  An attempt on
    an opponent-held cell is revealed to the mover and the turn passes; an
    attempt on an empty cell places a stone, unseen by the opponent.  Plus
    moves first and connects left to right; minus connects top to bottom.
    Payoffs are +1/-1.
    """
    if (rows, cols) != (2, 2):
        raise BadParameter("only the 2x2 board is supported")

    def node(stones, tried, to_act):
        """`stones[p]` are placed cells, `tried[p]` the cells p has attempted."""
        me = to_act
        legal = [c for c in range(4) if c not in tried[me]]
        acts = {}
        for c in legal:
            if c in stones[1 - me]:
                new_tried = (tried[0] | {c}, tried[1]) if me == 0 else (
                    tried[0], tried[1] | {c})
                acts[f"cell{c}"] = result(stones, new_tried, 1 - me,
                                          me, "blocked")
            else:
                new_stones = (stones[0] | {c}, stones[1]) if me == 0 else (
                    stones[0], stones[1] | {c})
                new_tried = (tried[0] | {c}, tried[1]) if me == 0 else (
                    tried[0], tried[1] | {c})
                if _wins(frozenset(new_stones[me]), me):
                    return_util = 1.0 if me == 0 else -1.0
                    acts[f"cell{c}"] = {"player": "terminal",
                                        "utility": return_util}
                else:
                    acts[f"cell{c}"] = result(new_stones, new_tried, 1 - me,
                                              me, "placed")
        return acts

    def result(stones, tried, to_act, last_mover, feedback):
        """Decision node for `to_act`, carrying the last mover's feedback."""
        me = to_act
        # turns alternate strictly (a blocked attempt forfeits the turn), so
        # the previous mover is always 1 - me; only she learns the feedback
        obs = ["", ""]
        obs[me] = "move"
        obs[1 - me] = f"was-{feedback}"
        return {
            "player": "plus" if me == 0 else "minus",
            "obs_plus": obs[0],
            "obs_minus": obs[1],
            "actions": node(stones, tried, me),
        }

    root = {
        "player": "plus",
        "obs_plus": "move",
        "obs_minus": "start",
        "actions": node((set(), set()), (set(), set()), 0),
    }
    return build_game(root, name="dark-hex-2x2")
