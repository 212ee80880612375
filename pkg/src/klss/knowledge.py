"""Infoset hypergraph: knowledge sets, closures, collapsed graph, allocation.

Two nodes are adjacent when they share either player's observation class.
The order-k knowledge set of a node set S is everything within hypergraph
distance k-1 of S; the common-knowledge closure is the connected component.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import EmptySet
from .tree import Game, Infoset, MINUS, PLUS


@dataclass(frozen=True)
class KnowledgeSet:
    seed: frozenset
    order: float  # positive integer or math.inf
    members: frozenset

    def __len__(self):
        return len(self.members)

    def __contains__(self, h):
        return h in self.members

    def __iter__(self):
        return iter(sorted(self.members))


def _node_classes(game: Game, h: int):
    idx = game.index
    return (idx.class_of[PLUS][h], idx.class_of[MINUS][h])


def knowledge_set(game: Game, S, k) -> KnowledgeSet:
    """Nodes within hypergraph distance k-1 of the node set S."""
    seed = frozenset(S)
    if not seed:
        raise EmptySet("knowledge set of an empty node set")
    if k != math.inf and (int(k) != k or k < 1):
        raise EmptySet(f"order must be a positive integer or inf, got {k}")
    if k == math.inf:
        return common_knowledge_closure(game, seed)
    idx = game.index
    members = set(seed)
    frontier = set(seed)
    seen_classes = [set(), set()]
    for _ in range(int(k) - 1):
        new = set()
        for h in frontier:
            for p in (PLUS, MINUS):
                c = idx.class_of[p][h]
                if c in seen_classes[p]:
                    continue
                seen_classes[p].add(c)
                for g in idx.classes[p][c].members:
                    if g not in members:
                        members.add(g)
                        new.add(g)
        if not new:
            break
        frontier = new
    return KnowledgeSet(seed, int(k), frozenset(members))


def _components(game: Game):
    """Union-find over class sharing; caches (component id per node, sizes)."""
    cache = game._caches
    if "kcomponents" not in cache:
        idx = game.index
        n = game.tree.num_nodes
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for p in (PLUS, MINUS):
            for cls in idx.classes[p]:
                first = cls.members[0]
                for h in cls.members[1:]:
                    union(first, h)
        comp = [find(h) for h in range(n)]
        members: dict[int, list[int]] = {}
        for h, c in enumerate(comp):
            members.setdefault(c, []).append(h)
        cache["kcomponents"] = (comp, members)
    return cache["kcomponents"]


def common_knowledge_closure(game: Game, S) -> KnowledgeSet:
    seed = frozenset(S)
    if not seed:
        raise EmptySet("closure of an empty node set")
    comp, members = _components(game)
    out = set()
    for c in {comp[h] for h in seed}:
        out.update(members[c])
    return KnowledgeSet(seed, math.inf, frozenset(out))


def infoset_knowledge_set(game: Game, player: int, infoset: int, k) -> KnowledgeSet:
    I = game.index.infosets[player][infoset]
    return knowledge_set(game, I.members, k)


def hypergraph_diameter(game: Game) -> int:
    """Largest finite distance between decision nodes in the infoset hypergraph."""
    comp, members = _components(game)
    idx = game.index
    owner = game.tree.owner
    best = 0
    for nodes in members.values():
        if len(nodes) <= 1:
            continue
        decision = [h for h in nodes if owner[h] in (PLUS, MINUS)]
        for src in decision:
            # BFS by class expansion
            dist = {src: 0}
            frontier = [src]
            seen_classes = [set(), set()]
            d = 0
            while frontier:
                d += 1
                new = []
                for h in frontier:
                    for p in (PLUS, MINUS):
                        c = idx.class_of[p][h]
                        if c in seen_classes[p]:
                            continue
                        seen_classes[p].add(c)
                        for g in idx.classes[p][c].members:
                            if g not in dist:
                                dist[g] = d
                                new.append(g)
                frontier = new
            best = max(
                best,
                max(dv for t, dv in dist.items() if owner[t] in (PLUS, MINUS)),
            )
    return best


# ---------------------------------------------------------------------------
# collapsed graph and allocation machinery


@dataclass
class CollapsedGraph:
    """Plus decision infosets, joined when they touch a shared minus class."""

    game: Game
    graph: nx.Graph = field(repr=False)

    def restricted(self, closure: KnowledgeSet) -> nx.Graph:
        keep = [
            I.index
            for I in self.game.index.infosets[PLUS]
            if I.members and all(h in closure for h in I.members)
        ]
        return self.graph.subgraph(keep)


def collapsed_graph(game: Game) -> CollapsedGraph:
    idx = game.index
    g = nx.Graph()
    for I in idx.infosets[PLUS]:
        if not I.phantom:
            g.add_node(I.index)
    by_minus_class: dict[int, set[int]] = {}
    for I in idx.infosets[PLUS]:
        for h in I.members:
            by_minus_class.setdefault(idx.class_of[MINUS][h], set()).add(I.index)
    for infosets in by_minus_class.values():
        for a, b in itertools.combinations(sorted(infosets), 2):
            g.add_edge(a, b)
    return CollapsedGraph(game, g)


def color_graph(graph: nx.Graph, exact_limit: int = 12) -> dict:
    """Proper coloring; exact chromatic search for small graphs, greedy above."""
    n = graph.number_of_nodes()
    if n == 0:
        return {}
    if n <= exact_limit:
        nodes = sorted(graph.nodes())
        for ncolors in range(1, n + 1):
            coloring = _exact_color(graph, nodes, ncolors)
            if coloring is not None:
                return coloring
    return nx.greedy_color(graph, strategy="largest_first")


def _exact_color(graph, nodes, ncolors):
    assign = {}

    def rec(i):
        if i == len(nodes):
            return True
        v = nodes[i]
        used = {assign[u] for u in graph.neighbors(v) if u in assign}
        for c in range(ncolors):
            if c not in used:
                assign[v] = c
                if rec(i + 1):
                    return True
                del assign[v]
            if i == 0:
                break  # fix the first node's color; colors are symmetric
        return False

    return dict(assign) if rec(0) else None


@dataclass
class IndependentSetPlan:
    """Seeded sampler of ancestor-closed independent sets of G'.

    Components of G' are colored independently; a draw picks one color class
    uniformly per component and drops any infoset whose plus-ancestors were
    not all drawn.  The inclusion probability of every infoset is therefore
    at most 1 over its component's coloring size.
    """

    game: Game
    cg: CollapsedGraph
    coloring: dict
    component_of: dict
    component_colors: dict  # component id -> number of colors used

    def ancestors(self, i: int) -> list[int]:
        """Plus infosets strictly above infoset i, innermost first."""
        idx = self.game.index
        out = []
        I = idx.infosets[PLUS][i]
        while I.parent_seq != 0:
            I = idx.infosets[PLUS][idx.seqs[PLUS][I.parent_seq][0]]
            out.append(I.index)
        return out

    def probability(self, i: int) -> float:
        """Exact Pr[i in sampled set]."""
        chain = [i] + self.ancestors(i)
        by_comp: dict[int, set[int]] = {}
        for j in chain:
            by_comp.setdefault(self.component_of[j], set()).add(
                self.coloring[j])
        p = 1.0
        for comp, colors in by_comp.items():
            if len(colors) > 1:
                return 0.0
            p /= self.component_colors[comp]
        return p

    def sample(self, rng: np.random.Generator) -> set[int]:
        chosen_color = {
            comp: rng.integers(n)
            for comp, n in self.component_colors.items()
        }
        raw = {
            i for i, c in self.coloring.items()
            if c == chosen_color[self.component_of[i]]
        }
        return {i for i in raw if all(a in raw for a in self.ancestors(i))}


def independent_set_plan(game: Game, cg: CollapsedGraph | None = None,
                         closure: KnowledgeSet | None = None) -> IndependentSetPlan:
    """Build the sampling plan, optionally restricted to one closure."""
    if cg is None:
        cg = collapsed_graph(game)
    graph = cg.graph if closure is None else cg.restricted(closure)
    coloring = {}
    component_of = {}
    component_colors = {}
    for comp_id, nodes in enumerate(nx.connected_components(graph)):
        sub = graph.subgraph(nodes)
        col = color_graph(sub)
        ncolors = max(col.values()) + 1 if col else 1
        component_colors[comp_id] = ncolors
        for v, c in col.items():
            coloring[v] = c
            component_of[v] = comp_id
    return IndependentSetPlan(game, cg, coloring, component_of, component_colors)
