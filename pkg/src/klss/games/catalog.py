"""Named game catalog and structural statistics."""

import re
from dataclasses import dataclass

from ..errors import UnknownGame
from ..tree import Game, PLUS, MINUS
from .pennies import matching_pennies, hidden_mp_counterexample, example_fig1
from .poker import kuhn, leduc
from .goofspiel import goofspiel
from .dice import liars_dice
from .darkhex import abrupt_dark_hex


@dataclass(frozen=True)
class GameCatalogEntry:
    name: str
    constructor: callable
    nodes: int | None = None
    infosets: int | None = None
    diameter: int | None = None


CATALOG = {
    e.name: e
    for e in [
        GameCatalogEntry("kuhn", kuhn, 58, 12, 3),
        GameCatalogEntry("leduc3", lambda: leduc(3), 9457, 936, 3),
        GameCatalogEntry(
            "goofspiel4-random",
            lambda: goofspiel(4, "random"), 26773, 3608, 4),
        GameCatalogEntry(
            "goofspiel4-inc",
            lambda: goofspiel(4, "increasing"), 1077, 162, 4),
        GameCatalogEntry("liars-dice5", lambda: liars_dice(5),
                         51181, 5120, 2),
        GameCatalogEntry("dark-hex-2x2", abrupt_dark_hex, 471, 94, 13),
        GameCatalogEntry("fig1", example_fig1),
    ]
}


def make_game(name: str) -> Game:
    """Build a catalog game by name; `mp-N` and `hidden-mp-N` take N inline."""
    if name in CATALOG:
        return CATALOG[name].constructor()
    m = re.fullmatch(r"mp-(\d+)", name)
    if m:
        return matching_pennies(int(m.group(1)))
    m = re.fullmatch(r"hidden-mp-(\d+)", name)
    if m:
        return hidden_mp_counterexample(int(m.group(1)))
    raise UnknownGame(f"unknown game {name!r}; known: "
                      + ", ".join(sorted(CATALOG)) + ", mp-N, hidden-mp-N")


def game_stats(game: Game, ks=(1, 2, 3, 4), sample_over: str = "decision") -> dict:
    """Node, infoset and knowledge-set statistics of a game.

    `diameter` is the largest finite node-to-node distance in the infoset
    hypergraph.  Average |I^k| sizes are taken over decision nodes, seeding
    each knowledge set with the mover's infoset at the sampled node
    (`sample_over="decision"`), or over all nodes with terminals and chance
    nodes attributed to the last decision on their path (`sample_over="all"`).
    """
    from ..knowledge import (
        common_knowledge_closure,
        hypergraph_diameter,
        knowledge_set,
    )

    idx = game.index
    nodes = game.tree.num_nodes
    infosets = sum(
        len([I for I in idx.infosets[p] if not I.phantom]) for p in (PLUS, MINUS)
    )

    # (player, infoset index, sampling weight)
    weights: dict[tuple, int] = {}
    if sample_over == "decision":
        for p in (PLUS, MINUS):
            for I in idx.infosets[p]:
                if not I.phantom:
                    weights[(p, I.index)] = len(I.members)
    elif sample_over == "all":
        tree = game.tree
        for h in range(nodes):
            g = h
            while g >= 0 and tree.owner[g] not in (PLUS, MINUS):
                g = tree.parent[g]
            if g < 0:
                continue
            p = tree.owner[g]
            key = (p, idx.infoset_of[p][g])
            weights[key] = weights.get(key, 0) + 1
    else:
        raise ValueError(f"unknown sampling convention {sample_over!r}")

    sums = {k: 0 for k in ks}
    closure_sum = 0
    total = sum(weights.values())
    for (p, i), w in weights.items():
        members = idx.infosets[p][i].members
        closure_sum += w * len(common_knowledge_closure(game, members))
        for k in ks:
            sums[k] += w * len(knowledge_set(game, members, k))

    out = {
        "nodes": nodes,
        "infosets": infosets,
        "diameter": hypergraph_diameter(game),
        "avg_closure": closure_sum / total if total else 0.0,
    }
    for k in ks:
        out[f"avg_I{k}"] = sums[k] / total if total else 0.0
    return out
