"""Extensive-form game trees with explicit observations.

A game is described as a nested record per node (see `build_game`).  Building a
game validates the tree, derives both players' observation-sequence partitions
(used for knowledge sets), the mover-owned decision infosets, and the
sequence-form index used by strategies and solvers.

Utilities are always stored from plus's perspective; minus minimizes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    BadDistribution,
    DimensionMismatch,
    ImperfectRecall,
    InvalidTree,
    NonDistribution,
    ObservationMoverMismatch,
)

PLUS = 0
MINUS = 1
NATURE = 2
TERMINAL = 3

PLAYER_NAMES = {PLUS: "plus", MINUS: "minus", NATURE: "nature", TERMINAL: "terminal"}
PLAYER_CODES = {v: k for k, v in PLAYER_NAMES.items()}

EMPTY_SEQ = 0

_PROB_TOL = 1e-12
_FLOW_TOL = 1e-9


class GameTree:
    """Immutable rooted tree with owners, actions, observations and utilities."""

    def __init__(self):
        self.owner: list[int] = []
        self.parent: list[int] = []
        self.parent_action: list[str] = []
        self.actions: list[list[str]] = []
        self.children: list[list[int]] = []
        self.nature_probs: list[list[float] | None] = []
        self.utility: list[float] = []
        self.obs: tuple[list[str], list[str]] = ([], [])
        self.depth: list[int] = []
        self.chance_reach: list[float] = []
        self.root = 0

    @property
    def num_nodes(self) -> int:
        return len(self.owner)

    def is_terminal(self, h: int) -> bool:
        return self.owner[h] == TERMINAL

    def terminals(self):
        return [h for h in range(self.num_nodes) if self.owner[h] == TERMINAL]

    def child(self, h: int, label: str) -> int:
        return self.children[h][self.actions[h].index(label)]


@dataclass
class Infoset:
    """A mover-owned decision infoset (or a phantom one with no member nodes)."""

    player: int
    index: int
    key: tuple
    members: list[int]
    actions: list[str]
    parent_seq: int
    seq_ids: list[int]

    @property
    def phantom(self) -> bool:
        return not self.members


@dataclass
class NodeClass:
    """Equivalence class of nodes with identical observation sequences."""

    player: int
    index: int
    key: tuple
    kind: str  # "internal" or "terminal"
    members: list[int]
    owner_flag: bool  # player owns the member nodes (internal classes only)


class InfosetIndex:
    """Both players' partitions plus the sequence-form index of a tree."""

    def __init__(self, tree: GameTree):
        self.tree = tree
        self.obs_key: tuple[list[tuple], list[tuple]] = ([], [])
        self.classes: tuple[list[NodeClass], list[NodeClass]] = ([], [])
        self.class_of: tuple[list[int], list[int]] = ([], [])
        self.infosets: tuple[list[Infoset], list[Infoset]] = ([], [])
        self.infoset_of: tuple[list[int], list[int]] = ([], [])
        # sequence i -> (infoset index, action index); entry 0 is the empty sequence
        self.seqs: tuple[list[tuple[int, int]], list[tuple[int, int]]] = (
            [(-1, -1)],
            [(-1, -1)],
        )
        self.node_seq: tuple[list[int], list[int]] = ([], [])
        self._seq_children: tuple[list[list[int]] | None, list[list[int]] | None] = (
            None,
            None,
        )
        self._key_to_infoset: tuple[dict, dict] = ({}, {})

    def num_seqs(self, player: int) -> int:
        return len(self.seqs[player])

    def infoset_by_key(self, player: int, key: tuple) -> Infoset | None:
        return self._key_to_infoset[player].get(key)

    def seq_children(self, player: int) -> list[list[int]]:
        """For each sequence, the infosets whose parent sequence it is."""
        if self._seq_children[player] is None:
            out = [[] for _ in range(self.num_seqs(player))]
            for I in self.infosets[player]:
                out[I.parent_seq].append(I.index)
            lst = list(self._seq_children)
            lst[player] = out
            self._seq_children = tuple(lst)
        return self._seq_children[player]

    def infosets_bottom_up(self, player: int) -> list[Infoset]:
        """Infosets ordered so that every infoset precedes its ancestors."""
        order = sorted(
            self.infosets[player], key=lambda I: len(I.key), reverse=True
        )
        return order

    def add_phantom_infoset(self, player: int, key: tuple, actions: list[str], parent_seq: int) -> Infoset:
        """Register an infoset with no member nodes (gadget bookkeeping)."""
        existing = self._key_to_infoset[player].get(key)
        if existing is not None:
            return existing
        idx = len(self.infosets[player])
        seq_ids = []
        for a_i in range(len(actions)):
            seq_ids.append(len(self.seqs[player]))
            self.seqs[player].append((idx, a_i))
        I = Infoset(player, idx, key, [], list(actions), parent_seq, seq_ids)
        self.infosets[player].append(I)
        self._key_to_infoset[player][key] = I
        self._seq_children = (None, None)
        return I


@dataclass
class PayoffAddends:
    """Sparse auxiliary payoffs keyed by (plus sequence, minus sequence)."""

    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def add(self, s: int, t: int, value: float):
        if value == 0.0:
            return
        key = (s, t)
        self.entries[key] = self.entries.get(key, 0.0) + value
        if self.entries[key] == 0.0:
            del self.entries[key]

    def scaled(self, factor: float) -> "PayoffAddends":
        return PayoffAddends({k: v * factor for k, v in self.entries.items()})

    def copy(self) -> "PayoffAddends":
        return PayoffAddends(dict(self.entries))

    def matrix(self, n_plus: int, n_minus: int) -> sp.csr_matrix:
        if not self.entries:
            return sp.csr_matrix((n_plus, n_minus))
        rows, cols, vals = zip(*((s, t, v) for (s, t), v in self.entries.items()))
        return sp.csr_matrix(
            (np.array(vals), (np.array(rows), np.array(cols))), shape=(n_plus, n_minus)
        )

    def minus_row(self, n_minus: int) -> np.ndarray:
        """Dense vector of the empty-plus-sequence row (the in-scope part)."""
        row = np.zeros(n_minus)
        for (s, t), v in self.entries.items():
            if s == EMPTY_SEQ:
                row[t] += v
        return row

    def __bool__(self):
        return bool(self.entries)


class Game:
    """A validated tree plus its index, addends and derived caches."""

    def __init__(self, tree: GameTree, index: InfosetIndex,
                 addends: PayoffAddends | None = None, name: str = ""):
        self.tree = tree
        self.index = index
        self.addends = addends if addends is not None else PayoffAddends()
        self.name = name
        self._payoff_matrix: sp.csr_matrix | None = None
        self._caches: dict = {}

    @property
    def n_seq(self) -> tuple[int, int]:
        return (self.index.num_seqs(PLUS), self.index.num_seqs(MINUS))

    def payoff_matrix(self) -> sp.csr_matrix:
        """Terminal payoffs as a sparse (plus-seq x minus-seq) matrix.

        Entry (s, t) accumulates u(z) * chance_reach(z) over terminals whose
        player sequences are (s, t).
        """
        if self._payoff_matrix is None:
            t = self.tree
            idx = self.index
            rows, cols, vals = [], [], []
            for z in range(t.num_nodes):
                if t.owner[z] != TERMINAL or t.utility[z] == 0.0:
                    continue
                rows.append(idx.node_seq[PLUS][z])
                cols.append(idx.node_seq[MINUS][z])
                vals.append(t.utility[z] * t.chance_reach[z])
            self._payoff_matrix = sp.csr_matrix(
                (np.array(vals), (np.array(rows, dtype=np.int64),
                                  np.array(cols, dtype=np.int64))),
                shape=self.n_seq,
            )
        return self._payoff_matrix

    def full_matrix(self) -> sp.csr_matrix:
        A = self.payoff_matrix()
        if self.addends:
            A = A + self.addends.matrix(*self.n_seq)
        return sp.csr_matrix(A)


# ---------------------------------------------------------------------------
# construction


def build_game(description: dict, name: str = "") -> Game:
    """Build and validate a game from a nested node description.

    Each record has a `player` field (nature/plus/minus/terminal).  Internal
    nodes carry `actions` (label -> child record), `obs_plus`, `obs_minus`;
    nature nodes add `probs` (label -> probability); terminals carry `utility`.
    """
    tree = GameTree()
    seen_ids: set[int] = set()

    def add(rec: dict, parent: int, action: str, depth: int, reach: float) -> int:
        if id(rec) in seen_ids:
            raise InvalidTree("node record referenced more than once")
        seen_ids.add(id(rec))
        if not isinstance(rec, dict) or "player" not in rec:
            raise InvalidTree("node record must be a dict with a 'player' field")
        try:
            owner = PLAYER_CODES[rec["player"]]
        except KeyError:
            raise InvalidTree(f"unknown player {rec.get('player')!r}")
        h = tree.num_nodes
        tree.owner.append(owner)
        tree.parent.append(parent)
        tree.parent_action.append(action)
        tree.depth.append(depth)
        tree.chance_reach.append(reach)
        if owner == TERMINAL:
            if "utility" not in rec:
                raise InvalidTree("terminal node without utility")
            tree.utility.append(float(rec["utility"]))
            tree.actions.append([])
            tree.children.append([])
            tree.nature_probs.append(None)
            tree.obs[PLUS].append("")
            tree.obs[MINUS].append("")
            return h
        tree.utility.append(0.0)
        tree.obs[PLUS].append(str(rec.get("obs_plus", "")))
        tree.obs[MINUS].append(str(rec.get("obs_minus", "")))
        acts = rec.get("actions")
        if not acts:
            raise InvalidTree("internal node without actions")
        labels = list(acts.keys())
        tree.actions.append(labels)
        if owner == NATURE:
            probs = rec.get("probs")
            if probs is None or set(probs) != set(labels):
                raise BadDistribution("nature node needs probs matching actions")
            pvec = [float(probs[a]) for a in labels]
            if min(pvec) < 0 or abs(sum(pvec) - 1.0) > _PROB_TOL:
                raise BadDistribution(f"nature distribution invalid: {pvec}")
            tree.nature_probs.append(pvec)
        else:
            tree.nature_probs.append(None)
            pvec = None
        tree.children.append([])
        for i, a in enumerate(labels):
            r = reach * (pvec[i] if pvec is not None else 1.0)
            c = add(acts[a], h, a, depth + 1, r)
            tree.children[h].append(c)
        return h

    import sys
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10000))
    try:
        add(description, -1, "", 0, 1.0)
    finally:
        sys.setrecursionlimit(old_limit)
    index = build_index(tree)
    return Game(tree, index, name=name)


def build_index(tree: GameTree) -> InfosetIndex:
    """Derive observation classes, decision infosets and sequence ids."""
    idx = InfosetIndex(tree)
    n = tree.num_nodes

    # observation-sequence keys for both players, iterative preorder
    for p in (PLUS, MINUS):
        keys: list[tuple] = [None] * n
        stack = [tree.root]
        while stack:
            h = stack.pop()
            par = tree.parent[h]
            if par < 0:
                base: tuple = ()
            else:
                base = keys[par]
                if tree.owner[par] == p:
                    base = base + (("a", tree.parent_action[h]),)
            if tree.owner[h] != TERMINAL:
                base = base + (("o", tree.obs[p][h]),)
            keys[h] = base
            stack.extend(tree.children[h])
        idx.obs_key[p].extend(keys)

    # mover-determination axiom: one observation label cannot appear both at
    # nodes the player owns and nodes she does not
    for p in (PLUS, MINUS):
        flag: dict[str, bool] = {}
        for h in range(n):
            if tree.owner[h] == TERMINAL:
                continue
            lab = tree.obs[p][h]
            owns = tree.owner[h] == p
            if lab in flag and flag[lab] != owns:
                raise ObservationMoverMismatch(
                    f"observation {lab!r} for player {PLAYER_NAMES[p]} appears both "
                    "at owned and non-owned nodes"
                )
            flag[lab] = owns

    # node classes per player (terminal classes kept apart from internal ones)
    for p in (PLUS, MINUS):
        class_map: dict[tuple, int] = {}
        idx.class_of[p].extend([-1] * n)
        for h in range(n):
            kind = "terminal" if tree.owner[h] == TERMINAL else "internal"
            ckey = (kind, idx.obs_key[p][h])
            c = class_map.get(ckey)
            if c is None:
                c = len(idx.classes[p])
                class_map[ckey] = c
                idx.classes[p].append(
                    NodeClass(p, c, idx.obs_key[p][h], kind, [], tree.owner[h] == p)
                )
            cls = idx.classes[p][c]
            cls.members.append(h)
            idx.class_of[p][h] = c
            if kind == "internal" and (tree.owner[h] == p) != cls.owner_flag:
                raise ObservationMoverMismatch(
                    f"class {cls.key} mixes owned and non-owned nodes"
                )

    # decision infosets and sequence ids, assigned in preorder
    for p in (PLUS, MINUS):
        idx.infoset_of[p].extend([-1] * n)
        idx.node_seq[p].extend([-1] * n)
        key_to_iset = idx._key_to_infoset[p]
        stack = [(tree.root, EMPTY_SEQ)]
        while stack:
            h, seq = stack.pop()
            idx.node_seq[p][h] = seq
            if tree.owner[h] == p:
                key = idx.obs_key[p][h]
                I = key_to_iset.get(key)
                if I is None:
                    i = len(idx.infosets[p])
                    seq_ids = []
                    for a_i in range(len(tree.actions[h])):
                        seq_ids.append(len(idx.seqs[p]))
                        idx.seqs[p].append((i, a_i))
                    I = Infoset(p, i, key, [], list(tree.actions[h]), seq, seq_ids)
                    idx.infosets[p].append(I)
                    key_to_iset[key] = I
                else:
                    if I.parent_seq != seq:
                        raise ImperfectRecall(
                            f"infoset {key} reached with two different own sequences"
                        )
                    if I.actions != tree.actions[h]:
                        raise ImperfectRecall(
                            f"infoset {key} members disagree on available actions"
                        )
                I.members.append(h)
                idx.infoset_of[p][h] = I.index
                for a_i, c in enumerate(tree.children[h]):
                    stack.append((c, I.seq_ids[a_i]))
            else:
                for c in tree.children[h]:
                    stack.append((c, seq))
    return idx


# ---------------------------------------------------------------------------
# serialization (game text format)


def game_to_dict(game: Game) -> dict:
    tree = game.tree

    def rec(h: int) -> dict:
        owner = tree.owner[h]
        if owner == TERMINAL:
            return {"player": "terminal", "utility": tree.utility[h]}
        d: dict = {
            "player": PLAYER_NAMES[owner],
            "obs_plus": tree.obs[PLUS][h],
            "obs_minus": tree.obs[MINUS][h],
        }
        if owner == NATURE:
            d["probs"] = {
                a: tree.nature_probs[h][i] for i, a in enumerate(tree.actions[h])
            }
        d["actions"] = {a: rec(c) for a, c in zip(tree.actions[h], tree.children[h])}
        return d

    import sys
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10000))
    try:
        return rec(tree.root)
    finally:
        sys.setrecursionlimit(old)


def save_game(game: Game, path: str):
    with open(path, "w") as f:
        json.dump(game_to_dict(game), f)


def load_game(path: str, name: str = "") -> Game:
    with open(path) as f:
        return build_game(json.load(f), name=name or path)


# ---------------------------------------------------------------------------
# strategies


@dataclass
class SequenceFormStrategy:
    """Realization-plan vector over one player's sequences."""

    player: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def copy(self) -> "SequenceFormStrategy":
        return SequenceFormStrategy(self.player, self.values.copy())


def validate_strategy(game: Game, x: SequenceFormStrategy, tol: float = _FLOW_TOL):
    idx = game.index
    p = x.player
    if len(x.values) != idx.num_seqs(p):
        raise DimensionMismatch(
            f"expected {idx.num_seqs(p)} sequence values, got {len(x.values)}"
        )
    v = x.values
    if abs(v[EMPTY_SEQ] - 1.0) > tol:
        raise NonDistribution("empty sequence must have value 1")
    if v.min() < -tol or v.max() > 1.0 + tol:
        raise NonDistribution("sequence values must lie in [0, 1]")
    for I in idx.infosets[p]:
        if abs(sum(v[s] for s in I.seq_ids) - v[I.parent_seq]) > tol:
            raise NonDistribution(f"flow conservation violated at infoset {I.key}")


def behavior_to_sequence(game: Game, player: int, behavior: dict) -> SequenceFormStrategy:
    """Turn per-infoset action distributions into a realization plan.

    `behavior` maps infoset index -> array of action probabilities; missing
    infosets default to uniform.
    """
    idx = game.index
    v = np.zeros(idx.num_seqs(player))
    v[EMPTY_SEQ] = 1.0
    for I in sorted(idx.infosets[player], key=lambda I: len(I.key)):
        b = behavior.get(I.index)
        m = len(I.actions)
        if b is None:
            b = np.full(m, 1.0 / m)
        b = np.asarray(b, dtype=float)
        if len(b) != m or b.min() < -_FLOW_TOL or abs(b.sum() - 1.0) > 1e-9:
            raise NonDistribution(f"behavior at infoset {I.key} is not a distribution")
        for a_i, s in enumerate(I.seq_ids):
            v[s] = v[I.parent_seq] * b[a_i]
    return SequenceFormStrategy(player, v)


def sequence_to_behavior(game: Game, x: SequenceFormStrategy) -> dict:
    """Per-infoset behavior; unreached infosets get the uniform distribution."""
    idx = game.index
    out = {}
    for I in idx.infosets[x.player]:
        m = len(I.actions)
        parent = x.values[I.parent_seq]
        if parent > 0:
            out[I.index] = np.array([x.values[s] / parent for s in I.seq_ids])
            total = out[I.index].sum()
            if total > 0:
                out[I.index] = out[I.index] / total
            else:
                out[I.index] = np.full(m, 1.0 / m)
        else:
            out[I.index] = np.full(m, 1.0 / m)
    return out


def uniform_strategy(game: Game, player: int) -> SequenceFormStrategy:
    return behavior_to_sequence(game, player, {})


def expected_value(game: Game, addends: PayoffAddends | None,
                   x: SequenceFormStrategy, y: SequenceFormStrategy) -> float:
    """Bilinear payoff: terminal sum plus addend sum, from plus's perspective."""
    n_sp, n_sm = game.n_seq
    if len(x.values) != n_sp or len(y.values) != n_sm:
        raise DimensionMismatch("strategy does not match game sequence space")
    val = float(x.values @ game.payoff_matrix() @ y.values)
    B = addends if addends is not None else game.addends
    if B:
        for (s, t), v in B.entries.items():
            val += v * x.values[s] * y.values[t]
    return val
