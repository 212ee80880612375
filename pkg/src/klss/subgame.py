"""Gadget subgames for knowledge-limited subgame solving.

make_subgame builds the maxmargin gadget at a plus infoset: one branch per
minus observation class intersecting the order-k knowledge set, entry
probabilities renormalized by blueprint reach, alternate values and
out-of-scope terminal payoffs folded into the empty-plus-sequence payoff row.
Resolve gadgets are an alternative rendering of the same payload.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadOrder,
    BadParameter,
    TranspositionCollision,
    UnreachableInfoset,
    WrongKind,
)
from .knowledge import knowledge_set
from .equilibrium import class_cbv, counterfactual_values
from .tree import (
    EMPTY_SEQ,
    Game,
    MINUS,
    NATURE,
    PLUS,
    PayoffAddends,
    SequenceFormStrategy,
    TERMINAL,
    build_game,
    save_game,
    sequence_to_behavior,
    behavior_to_sequence,
)

_SRC = "src:"


def _descendants(tree, roots) -> set[int]:
    out = set()
    stack = list(roots)
    while stack:
        h = stack.pop()
        if h in out:
            continue
        out.add(h)
        stack.extend(tree.children[h])
    return out


def _subtree_description(game: Game, h: int) -> dict:
    """Description-dict copy of the subtree at h, keeping observation labels."""
    t = game.tree
    if t.is_terminal(h):
        return {"player": "terminal", "utility": t.utility[h]}
    rec = {
        "player": {PLUS: "plus", MINUS: "minus", NATURE: "nature"}[t.owner[h]],
        "obs_plus": t.obs[PLUS][h],
        "obs_minus": t.obs[MINUS][h],
        "actions": {
            a: _subtree_description(game, c)
            for a, c in zip(t.actions[h], t.children[h])
        },
    }
    if t.owner[h] == NATURE:
        rec["probs"] = dict(zip(t.actions[h], t.nature_probs[h]))
    return rec


@dataclass
class BranchSpec:
    """Everything needed to re-render one gadget branch in either form."""

    action: str  # root action label
    class_index: int  # minus class in the source game
    class_key: tuple
    members: list[int]  # source nodes copied (I0 intersected with I^k)
    probs: list[float]  # entry probabilities, sum to 1
    mass: float  # D: blueprint reach mass of the copied nodes
    alt: float  # normalized alternate value of the full class (gift-adjusted)
    # payoff-row value subtracted on entry: alt scaled by (full class mass)/D
    # so branch payoffs (which are per unit of D) stay commensurable
    alt_row: float = 0.0
    subtrees: list[dict] = field(default_factory=list)
    # payoff-row entries below this branch, addressed by the chain of
    # (source minus-infoset key, action label) decisions below the class;
    # the empty chain addresses the branch entry sequence itself
    entries: dict = field(default_factory=dict)
    plus_keys: list[tuple] = field(default_factory=list)  # per member
    src_actions: dict = field(default_factory=dict)  # minus key -> actions


@dataclass
class GadgetGame:
    """A rendered gadget plus the payload to re-render or serialize it."""

    kind: str  # "maxmargin" or "resolve"
    game: Game
    branches: list[BranchSpec]
    source: Game
    source_infoset_key: tuple
    order: float
    options: frozenset
    entry_seq: dict = field(default_factory=dict)  # branch action -> minus seq
    plus_tokens: dict = field(default_factory=dict)  # obs label -> source key
    plus_prefix: tuple = ()  # gadget plus-key prefix ahead of the copy token

    def gadget_plus_key(self, source_key: tuple):
        """Gadget image of a source plus observation key, or None."""
        for label, src in self.plus_tokens.items():
            if source_key[: len(src)] == src:
                return self.plus_prefix + (("o", label),) + source_key[len(src):]
        return None

    def branch(self, action: str) -> BranchSpec:
        for b in self.branches:
            if b.action == action:
                return b
        raise KeyError(action)


def _chain_address(game: Game, t: int, t_base: int, class_key: tuple):
    """Address of source minus sequence t as decisions below the class."""
    idx = game.index
    chain = []
    cur = t
    while cur != t_base:
        if cur == EMPTY_SEQ:
            raise BadParameter("sequence does not pass through the class")
        inf_i, a_i = idx.seqs[MINUS][cur]
        I = idx.infosets[MINUS][inf_i]
        if I.key[: len(class_key)] != class_key:
            raise BadParameter("sequence leaves the class subtree")
        chain.append((I.key, I.actions[a_i], tuple(I.actions)))
        cur = I.parent_seq
    chain.reverse()
    return tuple((key, a) for key, a, _ in chain), {
        key: list(acts) for key, _, acts in chain}


def transposition_key(game: Game, h: int):
    """Canonical description of a node's future, including observations.

    Two nodes with equal keys are indistinguishable going forward: same legal
    actions, same observations for both players along every continuation,
    same chance odds and same terminal utilities.
    """
    t = game.tree
    if t.is_terminal(h):
        return ("z", t.utility[h])
    probs = tuple(t.nature_probs[h]) if t.owner[h] == NATURE else None
    kids = tuple(
        (a, t.obs[PLUS][c], t.obs[MINUS][c], transposition_key(game, c))
        for a, c in zip(t.actions[h], t.children[h])
    )
    return ("n", t.owner[h], probs, kids)


def _branch_block(game: Game, spec: BranchSpec):
    """Aligned payoff section of a branch, for weak-dominance comparison.

    Coordinates are positions in a fixed traversal of the copied subtrees
    plus relative fold-in addresses; values are expected plus-payoffs per
    unit of entry probability, with the alternate value as an extra offset
    coordinate.  Transposed branches produce identically-shaped blocks.
    """
    t = game.tree
    block = {("offset",): -spec.alt_row}
    for i, h in enumerate(spec.members):
        base = t.chance_reach[h]
        order = []
        stack = [h]
        while stack:
            n = stack.pop()
            order.append(n)
            stack.extend(reversed(t.children[n]))
        for pos, n in enumerate(order):
            if t.is_terminal(n) and t.utility[n] != 0.0:
                block[("z", i, pos)] = (
                    spec.probs[i] * t.utility[n] * t.chance_reach[n] / base)
    for chain, v in spec.entries.items():
        rel = tuple((key[len(spec.class_key):], a) for key, a in chain)
        block[("b", rel)] = block.get(("b", rel), 0.0) + v
    return block


def _weakly_dominated_for_minus(a: dict, b: dict) -> bool:
    """True if section a never pays minus more than section b does."""
    return all(a.get(k, 0.0) >= b.get(k, 0.0) - 1e-12
               for k in set(a) | set(b))


def make_subgame(g: Game, x: SequenceFormStrategy, infoset, k,
                 options: frozenset | set = frozenset(),
                 seed: int = 0) -> GadgetGame:
    """Maxmargin gadget at a plus infoset under blueprint x.

    One branch per minus observation class meeting the order-k knowledge
    set of the infoset; entry probabilities are p(h)x(h)/D, copied nodes
    label their observations with the full source observation sequences,
    the class's counterfactual value is subtracted on entry, and payoffs of
    terminals below the class but outside the copied region are folded into
    the empty-plus-sequence payoff row.
    """
    options = frozenset(options)
    idx = g.index
    if isinstance(infoset, tuple):
        infoset = idx.infoset_by_key(PLUS, infoset)
    if infoset is None or not infoset.members:
        raise UnreachableInfoset("no such plus infoset")
    if not (k == math.inf or (isinstance(k, int) and k >= 1 and k % 2 == 1)):
        raise BadOrder(f"order must be an odd positive integer or inf: {k}")
    if "MergeTranspositions" in options and k != 1:
        raise BadOrder("transposition merging requires order 1")

    t = g.tree
    w = np.asarray(t.chance_reach) * np.array(
        [x.values[s] for s in idx.node_seq[PLUS]])
    if x.values[idx.node_seq[PLUS][infoset.members[0]]] <= 0.0:
        raise UnreachableInfoset("blueprint never reaches the infoset")

    Ik = set(knowledge_set(g, infoset.members, k).members)
    down_Ik = _descendants(t, Ik)
    cbv = (counterfactual_values(g, g.addends, x)
           if "Reach" in options else None)

    # group the knowledge set by minus observation class
    by_class: dict[int, list[int]] = {}
    for h in sorted(Ik):
        by_class.setdefault(idx.class_of[MINUS][h], []).append(h)

    specs = []
    for ci in sorted(by_class):
        members = by_class[ci]
        D = float(sum(w[h] for h in members))
        if D <= 0.0:
            continue
        cls = idx.classes[MINUS][ci]
        mass, alt = class_cbv(g, g.addends, x, ci)
        if "Reach" in options:
            alt -= _gift(g, cbv, cls)
        spec = BranchSpec(
            action=f"enter:{ci}",
            class_index=ci,
            class_key=cls.key,
            members=members,
            probs=[w[h] / D for h in members],
            mass=D,
            alt=alt,
            alt_row=alt * mass / D,
        )
        t_base = idx.node_seq[MINUS][members[0]]
        # out-of-scope terminals below the full class, folded into the row
        for root in cls.members:
            for z in sorted(_descendants(t, [root])):
                if t.is_terminal(z) and z not in down_Ik and t.utility[z] != 0:
                    chain, acts = _chain_address(
                        g, idx.node_seq[MINUS][z], t_base, cls.key)
                    spec.src_actions.update(acts)
                    spec.entries[chain] = (
                        spec.entries.get(chain, 0.0) + w[z] * t.utility[z] / D)
        # carry the source game's own payoff row below the class, rescaled
        for (s, tt), v in g.addends.entries.items():
            if s != EMPTY_SEQ or tt == EMPTY_SEQ:
                continue
            inf_i, _ = idx.seqs[MINUS][tt]
            I2 = idx.infosets[MINUS][inf_i]
            if I2.key[: len(cls.key)] == cls.key:
                chain, acts = _chain_address(g, tt, t_base, cls.key)
                spec.src_actions.update(acts)
                spec.entries[chain] = spec.entries.get(chain, 0.0) + v / D
        for h in members:
            spec.subtrees.append(_subtree_description(g, h))
            spec.subtrees[-1]["obs_plus"] = _SRC + repr(idx.obs_key[PLUS][h])
            spec.subtrees[-1]["obs_minus"] = _SRC + repr(cls.key)
            spec.plus_keys.append(idx.obs_key[PLUS][h])
        specs.append(spec)

    if "MergeTranspositions" in options:
        specs = _merge_transpositions(g, specs, seed)

    gg = GadgetGame(
        kind="maxmargin", game=None, branches=specs, source=g,
        source_infoset_key=infoset.key, order=k, options=options)
    _render(gg)
    return gg


def _gift(g: Game, cbv, cls) -> float:
    """Accumulated minus error on the path to the class (always >= 0)."""
    idx = g.index
    gift = 0.0
    cur = idx.node_seq[MINUS][cls.members[0]]
    while cur != EMPTY_SEQ:
        inf_i, a_i = idx.seqs[MINUS][cur]
        I = idx.infosets[MINUS][inf_i]
        if I.index in cbv.infoset_value:
            gift += (cbv.seq_value[(I.index, a_i)]
                     - cbv.infoset_value[I.index])
        cur = I.parent_seq
    return gift


def _merge_transpositions(g: Game, specs, seed):
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(len(specs)))
    kept: dict = {}  # transposition key -> position in `out`
    out = []
    for i in order:
        spec = specs[i]
        if len(spec.members) != 1:
            raise TranspositionCollision(
                "merging expects one copied node per branch")
        tkey = transposition_key(g, spec.members[0])
        if tkey not in kept:
            kept[tkey] = len(out)
            out.append(spec)
            continue
        j = kept[tkey]
        new_b, old_b = _branch_block(g, spec), _branch_block(g, out[j])
        if (not _weakly_dominated_for_minus(new_b, old_b)
                and _weakly_dominated_for_minus(old_b, new_b)):
            out[j] = spec  # the kept section was the dominated one
    out.sort(key=lambda s: s.class_index)
    return out


def _render(gg: GadgetGame):
    """Build the gadget Game (tree, index, payoff row) for gg.kind."""
    N = len(gg.branches)
    if N == 0:
        raise UnreachableInfoset("gadget has no reachable branches")
    scale = 1.0 if gg.kind == "maxmargin" else 1.0 / N

    def nature_rec(b: BranchSpec) -> dict:
        return {
            "player": "nature",
            "obs_plus": "enter",
            "obs_minus": "enter",
            "probs": {f"h{i}": p for i, p in enumerate(b.probs)},
            "actions": {f"h{i}": s for i, s in enumerate(b.subtrees)},
        }

    if gg.kind == "maxmargin":
        desc = {
            "player": "minus",
            "obs_plus": "gadget-root",
            "obs_minus": "gadget-root",
            "actions": {b.action: nature_rec(b) for b in gg.branches},
        }
    elif gg.kind == "resolve":
        desc = {
            "player": "nature",
            "obs_plus": "gadget-root",
            "obs_minus": "gadget-root",
            "probs": {b.action: 1.0 / N for b in gg.branches},
            "actions": {
                b.action: {
                    "player": "minus",
                    "obs_plus": "pick",
                    "obs_minus": b.action,
                    "actions": {
                        "Exit": {"player": "terminal", "utility": 0.0},
                        "Play": nature_rec(b),
                    },
                }
                for b in gg.branches
            },
        }
    else:
        raise WrongKind(gg.kind)

    name = f"{gg.source.name or 'game'}-gadget-{gg.kind}"
    game = build_game(desc, name=name)
    idx = game.index
    t = game.tree

    # locate branch entry points: the copied-subtree roots per branch
    gg.entry_seq = {}
    gg.plus_tokens = {}
    root_children = dict(zip(t.actions[0], t.children[0]))
    B = PayoffAddends()
    for b in gg.branches:
        node = root_children[b.action]
        if gg.kind == "resolve":
            node = t.children[node][t.actions[node].index("Play")]
        copy0 = t.children[node][0]
        entry = idx.node_seq[MINUS][copy0]
        gg.entry_seq[b.action] = entry
        base_key = idx.obs_key[MINUS][copy0]
        gg.plus_prefix = idx.obs_key[PLUS][copy0][:-1]
        for key, src in zip(
                (_SRC + repr(k) for k in b.plus_keys), b.plus_keys):
            gg.plus_tokens[key] = src
        B.add(EMPTY_SEQ, entry, -b.alt_row * scale)
        for chain, v in b.entries.items():
            B.add(EMPTY_SEQ,
                  _gadget_column(game, b, base_key, entry, chain),
                  v * scale)
    game._payoff_matrix = None  # phantom infosets may have widened the index
    game.addends = B
    gg.game = game


def _gadget_column(game: Game, b: BranchSpec, base_key: tuple,
                   entry_seq: int, chain) -> int:
    """Gadget minus sequence for a chain of source decisions below a branch.

    Decision points minus can distinguish but that no copied node realizes
    are registered as phantom infosets so the payoff row has a column.
    """
    idx = game.index
    cur = entry_seq
    for src_key, action in chain:
        gk = base_key + src_key[len(b.class_key):]
        I = idx.infoset_by_key(MINUS, gk)
        if I is None:
            I = idx.add_phantom_infoset(
                MINUS, gk, b.src_actions[src_key], cur)
        cur = I.seq_ids[I.actions.index(action)]
    return cur


def maxmargin_to_resolve(gg: GadgetGame) -> GadgetGame:
    """Re-render as the resolve gadget: uniform nature root, per-branch
    Exit/Play choice, payoff row scaled by 1/N."""
    if gg.kind != "maxmargin":
        raise WrongKind("expected a maxmargin gadget")
    out = GadgetGame(
        kind="resolve", game=None, branches=gg.branches, source=gg.source,
        source_infoset_key=gg.source_infoset_key, order=gg.order,
        options=gg.options)
    _render(out)
    return out


def resolve_to_maxmargin(gg: GadgetGame) -> GadgetGame:
    """Inverse of maxmargin_to_resolve (payoff row scaled back by N)."""
    if gg.kind != "resolve":
        raise WrongKind("expected a resolve gadget")
    out = GadgetGame(
        kind="maxmargin", game=None, branches=gg.branches, source=gg.source,
        source_infoset_key=gg.source_infoset_key, order=gg.order,
        options=gg.options)
    _render(out)
    return out


def margins(g: Game, x_new: SequenceFormStrategy,
            x_blueprint: SequenceFormStrategy, infoset, k) -> dict:
    """Counterfactual improvement per minus class at the gadget roots.

    M(C) = u*(x_new|C) - u*(x_blueprint|C) in normalized counterfactual
    units; nonnegative margins certify that the refit strategy is no more
    exploitable than the blueprint.
    """
    idx = g.index
    if isinstance(infoset, tuple):
        infoset = idx.infoset_by_key(PLUS, infoset)
    if infoset is None or not infoset.members:
        raise UnreachableInfoset("no such plus infoset")
    Ik = set(knowledge_set(g, infoset.members, k).members)
    out = {}
    for ci in sorted({idx.class_of[MINUS][h] for h in Ik}):
        m_old, old = class_cbv(g, g.addends, x_blueprint, ci)
        if m_old <= 0.0:
            continue
        _, new = class_cbv(g, g.addends, x_new, ci)
        out[idx.classes[MINUS][ci].key] = new - old
    return out


def compose_strategy(gg: GadgetGame, gadget_x: SequenceFormStrategy,
                     blueprint: SequenceFormStrategy,
                     only_reached: bool = True) -> SequenceFormStrategy:
    """Splice a gadget plus-strategy back into the source blueprint.

    Behavior is overwritten at every source plus infoset realized in the
    gadget; with only_reached, gadget infosets the gadget strategy never
    reaches keep the blueprint's behavior instead.
    """
    g = gg.source
    beh = sequence_to_behavior(g, blueprint)
    gidx = gg.game.index
    gbeh = sequence_to_behavior(gg.game, gadget_x)
    for I in gidx.infosets[PLUS]:
        src_key = _source_plus_key(gg, I.key)
        if src_key is None:
            continue
        src_I = g.index.infoset_by_key(PLUS, src_key)
        if src_I is None:
            continue
        if only_reached and gadget_x.values[I.parent_seq] <= 0.0:
            continue
        probs = gbeh[I.index]
        if list(src_I.actions) == list(I.actions):
            beh[src_I.index] = probs
        else:
            beh[src_I.index] = np.array(
                [probs[I.actions.index(a)] for a in src_I.actions])
    return behavior_to_sequence(g, PLUS, beh)


def _source_plus_key(gg: GadgetGame, gadget_key: tuple):
    for pos, (kind, label) in enumerate(gadget_key):
        if kind == "o" and isinstance(label, str) and label.startswith(_SRC):
            src = gg.plus_tokens.get(label)
            if src is None:
                return None
            return src + gadget_key[pos + 1:]
    return None


def save_gadget(gg: GadgetGame, path: str):
    """Write the rendered gadget game plus a sidecar with branch records."""
    save_game(gg.game, path)
    meta = {
        "kind": gg.kind,
        "source": gg.source.name,
        "infoset": repr(gg.source_infoset_key),
        "order": "inf" if gg.order == math.inf else gg.order,
        "options": sorted(gg.options),
        "payoff_row": [
            {"plus_seq": s, "minus_seq": t, "value": v}
            for (s, t), v in sorted(gg.game.addends.entries.items())
        ],
        "branches": [
            {
                "action": b.action,
                "class_key": repr(b.class_key),
                "members": b.members,
                "mass": b.mass,
                "alt": b.alt,
                "alt_row": b.alt_row,
                "entry_probs": b.probs,
            }
            for b in gg.branches
        ],
    }
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1)
