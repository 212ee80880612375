"""Safety procedures and experiment pipelines built on the gadget solver.

Covers restricted (epsilon-floor) blueprints, nested order-1 solving at
every infoset, the blueprint-update and deviation-allocation schedules with
their safety audits, affine-equilibrium checks, and the two report tables.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BadOrder, BadParameter, DidNotConverge, UnreachableInfoset
from .equilibrium import (
    SolverConfig,
    _solve_lp_for,
    action_floors,
    best_response,
    exploitability,
    game_value,
    sample_equilibria,
    solve,
    solve_margin_tiebreak,
    uniform_floors,
)
from .games import CATALOG, make_game
from .games.catalog import game_stats
from .knowledge import independent_set_plan
from .subgame import compose_strategy, make_subgame
from .tree import (
    EMPTY_SEQ,
    Game,
    MINUS,
    PLUS,
    SequenceFormStrategy,
    behavior_to_sequence,
    expected_value,
    sequence_to_behavior,
)


def epsilon_uniform_blueprint(g: Game, eps: float,
                              config: SolverConfig = SolverConfig(),
                              ) -> SequenceFormStrategy:
    """Least-exploitable plus strategy with every action's probability at
    least eps/m at every owned infoset."""
    if not 0.0 <= eps <= 1.0:
        raise BadParameter("eps must lie in [0, 1]")
    floors = (uniform_floors(g, PLUS, eps), [])
    return _solve_lp_for(g, None, PLUS, config, floors)


def epsilon_action_blueprint(g: Game, eps: float, label: str,
                             config: SolverConfig = SolverConfig(),
                             ) -> SequenceFormStrategy:
    """Least-exploitable plus strategy that plays the named action with
    probability at least eps wherever it is available."""
    if not 0.0 <= eps <= 1.0:
        raise BadParameter("eps must lie in [0, 1]")
    floors = (action_floors(g, PLUS, eps, label), [])
    if not floors[0]:
        raise BadParameter(f"no plus infoset offers action {label!r}")
    return _solve_lp_for(g, None, PLUS, config, floors)


@dataclass
class NestedSolveRecord:
    strategy: SequenceFormStrategy
    path: list = field(default_factory=list)  # infoset keys in solve order
    solves: list = field(default_factory=list)  # per-solve summaries
    failures: list = field(default_factory=list)
    expl_before: float = float("nan")
    expl_after: float = float("nan")

    @property
    def num_solves(self) -> int:
        return len(self.solves)


def _gadget_solve(gg, root_key, config, floor_label=None):
    """Solve a rendered gadget with the blueprint floor exempting its root.

    With floor_label the restriction is the named-action floor instead of
    the uniform one, matching an epsilon-bet/fold blueprint.
    """
    image = gg.game.index.infoset_by_key(PLUS, gg.gadget_plus_key(root_key))
    exempt = frozenset() if image is None else frozenset([image.index])
    if floor_label is None:
        plus_rows = uniform_floors(gg.game, PLUS, config.epsilon_plus, exempt)
    else:
        plus_rows = [r for r in action_floors(
            gg.game, PLUS, config.epsilon_plus, floor_label)
            if r[0] not in exempt]
    floors = (
        plus_rows,
        uniform_floors(gg.game, MINUS, config.epsilon_minus),
    )
    if gg.kind == "maxmargin":
        gx = solve_margin_tiebreak(gg.game, gg.game.addends, config, floors)
        gy, _ = best_response(gg.game, gg.game.addends, gx, MINUS)
    else:
        gx, gy, _ = solve(gg.game, gg.game.addends, config, floors=floors)
    return image, gx, gy


def nested_klss_everywhere(g: Game, blueprint: SequenceFormStrategy, k: int = 1,
                           options: frozenset = frozenset(),
                           config: SolverConfig = SolverConfig(),
                           only: set | None = None,
                           audit: bool = True,
                           floor_label: str | None = None) -> NestedSolveRecord:
    """Order-1 subgame solving at every reachable plus infoset, nested.

    Walks plus infosets depth-first in play order.  Each solve builds its
    gadget from the current context — the gadget produced by the parent
    solve — so the subgame replaces the game as play proceeds.  The
    epsilon-uniform restriction applies at every gadget infoset except the
    root being solved.  Zero-probability infosets keep blueprint behavior.
    With `only`, solves happen just at that (ancestor-closed) set of
    infoset indices.
    """
    if k != 1:
        raise BadOrder("the nested harness supports order 1 only")
    idx = g.index
    beh = sequence_to_behavior(g, blueprint)
    rec = NestedSolveRecord(strategy=blueprint)
    children = idx.seq_children(PLUS)

    def walk(inf_i: int, ctx_game: Game, ctx_x, keymap):
        if only is not None and inf_i not in only:
            return
        I = idx.infosets[PLUS][inf_i]
        ctx_key = keymap(I.key)
        ctx_I = (None if ctx_key is None
                 else ctx_game.index.infoset_by_key(PLUS, ctx_key))
        if ctx_I is None or ctx_x.values[ctx_I.parent_seq] <= 0.0:
            return  # unreachable: blueprint behavior stands below here
        try:
            gg = make_subgame(ctx_game, ctx_x, ctx_I, 1, options,
                              seed=config.seed)
            image, gx, gy = _gadget_solve(gg, ctx_I.key, config, floor_label)
        except (DidNotConverge, UnreachableInfoset) as err:
            rec.failures.append({"infoset": I.key, "error": str(err)})
            return
        gbeh = sequence_to_behavior(gg.game, gx)
        if image is not None:
            probs = gbeh[image.index]
            beh[inf_i] = np.array(
                [probs[image.actions.index(a)] for a in I.actions])
        rec.path.append(I.key)
        rec.solves.append({
            "infoset": I.key,
            "branches": len(gg.branches),
            "gadget_value": expected_value(
                gg.game, gg.game.addends, gx, gy),
            "kind": gg.kind,
        })
        sub_map = (lambda K, _km=keymap, _gg=gg:
                   None if _km(K) is None else _gg.gadget_plus_key(_km(K)))
        for s in I.seq_ids:
            for child in children[s]:
                walk(child, gg.game, gx, sub_map)

    for root_inf in children[EMPTY_SEQ]:
        walk(root_inf, g, blueprint, lambda K: K)
    rec.strategy = behavior_to_sequence(g, PLUS, beh)
    if audit:
        rec.expl_before = exploitability(g, blueprint)
        rec.expl_after = exploitability(g, rec.strategy)
    return rec


def blueprint_update_schedule(g: Game, blueprint: SequenceFormStrategy,
                              schedule, config: SolverConfig = SolverConfig(),
                              options: frozenset = frozenset()):
    """Sequential order-1 solves that overwrite the blueprint at and below
    each scheduled infoset; returns (blueprints, exploitability trace).

    The trace is non-increasing (up to solver slack): each solve can only
    raise the opponent's margins at the gadget roots.
    """
    idx = g.index
    bp = blueprint
    blueprints = [bp]
    trace = [exploitability(g, bp)]
    for item in schedule:
        I = idx.infoset_by_key(PLUS, item) if isinstance(item, tuple) else item
        if I is None:
            raise UnreachableInfoset(f"no plus infoset {item!r}")
        if bp.values[I.parent_seq] <= 0.0:
            raise UnreachableInfoset(
                "scheduled infoset has zero probability under the blueprint")
        gg = make_subgame(g, bp, I, 1, options, seed=config.seed)
        _, gx, _ = _gadget_solve(gg, I.key, config)
        bp = compose_strategy(gg, gx, bp)
        blueprints.append(bp)
        trace.append(exploitability(g, bp))
    return blueprints, trace


def allocation_play(g: Game, blueprint: SequenceFormStrategy, seed: int,
                    config: SolverConfig = SolverConfig(),
                    options: frozenset = frozenset()):
    """Nested solving restricted to a sampled ancestor-closed independent
    set of plus infosets; safe for any epsilon-equilibrium blueprint.

    Returns (record, audit) where the audit bounds the composed
    exploitability by the blueprint's plus epsilon + 5x tolerance.
    """
    plan = independent_set_plan(g)
    rng = np.random.default_rng(seed)
    chosen = set(plan.sample(rng))
    rec = nested_klss_everywhere(
        g, blueprint, 1, options, config, only=chosen)
    eps_measured = rec.expl_before
    bound = eps_measured + 5.0 * config.tolerance
    audit = {
        "seed": seed,
        "num_chosen": len(chosen),
        "chosen": sorted(chosen),
        "blueprint_expl": eps_measured,
        "post_expl": rec.expl_after,
        "bound": bound,
        "ok": bool(rec.expl_after <= bound),
    }
    return rec, audit


def affine_check(g: Game, x_composed: SequenceFormStrategy,
                 ne_samples) -> float:
    """Max |u(x', y*) - v*| over sampled optimal minus strategies.

    A strategy produced by nested solving from an exact-equilibrium
    blueprint must remain a best response to every optimal opponent."""
    v = game_value(g)
    worst = 0.0
    for y in ne_samples:
        worst = max(worst, abs(expected_value(g, None, x_composed, y) - v))
    return worst


# ---------------------------------------------------------------------------
# report tables

_CSV_FIELDS = ["game", "epsilon", "blueprint_expl", "post_expl", "ratio",
               "seed", "solver_iters", "wallclock_ms"]
_RATIO_FLOOR = 1e-10

# Named blueprint variants: game in the catalog + a forced action floor.
TABLE1_VARIANTS = {
    "kuhn:eps-bet": ("kuhn", "bet"),
    "leduc3:eps-fold": ("leduc3", "fold"),
    "leduc3:eps-bet": ("leduc3", "raise"),
}


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)
    config: SolverConfig = SolverConfig()
    failures: list = field(default_factory=list)

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r.get(k)) for k in _CSV_FIELDS})
        text = buf.getvalue()
        if path_or_buf is not None:
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, float):
        if v != v:
            return "nan"
        if v == float("inf"):
            return "inf"
        return format(v, ".10g")
    return v


def _table1_row(name: str, eps: float, config: SolverConfig):
    """One Table-1 row: (row dict or None, failure list)."""
    t0 = time.perf_counter()
    try:
        label = None
        if name in TABLE1_VARIANTS:
            base, label = TABLE1_VARIANTS[name]
            g = make_game(base)
            bp = epsilon_action_blueprint(g, eps, label, config)
        else:
            g = make_game(name)
            bp = epsilon_uniform_blueprint(g, eps, config)
        nested_cfg = SolverConfig(
            tolerance=config.tolerance, max_iters=config.max_iters,
            seed=config.seed, epsilon_plus=eps,
            engine=config.engine, averaging=config.averaging,
            cbv_orientation=config.cbv_orientation)
        rec = nested_klss_everywhere(g, bp, 1, config=nested_cfg,
                                     floor_label=label)
    except Exception as err:
        return None, [{"game": name, "error": repr(err)}]
    ratio = (float("inf") if rec.expl_after <= _RATIO_FLOOR
             else rec.expl_before / rec.expl_after)
    row = {
        "game": name,
        "epsilon": eps,
        "blueprint_expl": rec.expl_before,
        "post_expl": rec.expl_after,
        "ratio": ratio,
        "seed": config.seed,
        "solver_iters": rec.num_solves,
        "wallclock_ms": int((time.perf_counter() - t0) * 1000),
    }
    failures = ([{"game": name, "solves": rec.failures}]
                if rec.failures else [])
    return row, failures


def run_table1(games=None, eps: float = 0.25,
               config: SolverConfig = SolverConfig(),
               variants: bool = False, jobs: int = 1) -> ExperimentReport:
    """Blueprint vs post-nested-solving exploitability per game.

    Rows follow the schema game,epsilon,blueprint_expl,post_expl,ratio,
    seed,solver_iters,wallclock_ms.  Per-row failures are recorded on the
    report and the run continues.  Rows are independent; jobs > 1 solves
    them in separate processes.
    """
    names = list(games) if games else [n for n in CATALOG if n != "fig1"]
    if variants:
        names += [v for v in TABLE1_VARIANTS if
                  not games or TABLE1_VARIANTS[v][0] in games]
    report = ExperimentReport(config=config)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(
                _table1_row, names, [eps] * len(names),
                [config] * len(names)))
    else:
        results = [_table1_row(name, eps, config) for name in names]
    for row, failures in results:
        if row is not None:
            report.rows.append(row)
        report.failures.extend(failures)
    return report


def run_table2(games=None, ks=(1, 2, 3, 4)) -> list:
    """Structural statistics rows for the catalog games."""
    names = list(games) if games else [n for n in CATALOG if n != "fig1"]
    rows = []
    for name in names:
        g = make_game(name)
        stats = game_stats(g, ks=ks)
        stats["game"] = name
        rows.append(stats)
    return rows


# ---------------------------------------------------------------------------
# safety property suites

def suite_update_monotone(games=("kuhn", "mp-10", "fig1"), seeds=range(5),
                          eps: float = 0.25,
                          config: SolverConfig = SolverConfig()) -> list:
    """Blueprint-update runs must never raise exploitability.

    For each game and seed, updates the blueprint along a seeded random
    order of plus infosets (skipping any that the current blueprint no
    longer reaches) and checks the exploitability trace is non-increasing
    within 5x solver tolerance.
    """
    out = []
    slack = 5.0 * config.tolerance
    for name in games:
        g = make_game(name)
        bp0 = epsilon_uniform_blueprint(g, eps, config)
        order = list(range(len(g.index.infosets[PLUS])))
        for seed in seeds:
            rng = np.random.default_rng([seed, sum(map(ord, name))])
            perm = list(rng.permutation(order))
            bp = bp0
            trace = [exploitability(g, bp)]
            for i in perm:
                I = g.index.infosets[PLUS][i]
                if bp.values[I.parent_seq] <= 0.0:
                    continue
                bps, t = blueprint_update_schedule(g, bp, [I], config)
                bp = bps[-1]
                trace.append(t[-1])
            ok = all(b <= a + slack for a, b in zip(trace, trace[1:]))
            out.append({"game": name, "seed": seed, "trace": trace, "ok": ok})
    return out


def suite_allocation(game: str = "kuhn", seeds=range(20), eps: float = 0.25,
                     config: SolverConfig = SolverConfig()) -> list:
    """Sampled-allocation runs must stay within the blueprint's epsilon."""
    g = make_game(game)
    bp = epsilon_uniform_blueprint(g, eps, config)
    out = []
    for seed in seeds:
        _, audit = allocation_play(g, bp, seed, config)
        audit["game"] = game
        out.append(audit)
    return out


def suite_affine(game: str = "kuhn", count: int = 25,
                 config: SolverConfig = SolverConfig(),
                 tol: float = 1e-4) -> dict:
    """Composed strategies from an exact-equilibrium blueprint must remain
    best responses to every optimal opponent strategy."""
    g = make_game(game)
    bp = epsilon_uniform_blueprint(g, 0.0, config)
    rec = nested_klss_everywhere(g, bp, 1, config=config)
    samples = sample_equilibria(g, count, seed=config.seed)
    dev = affine_check(g, rec.strategy, samples)
    return {"game": game, "samples": len(samples), "deviation": dev,
            "ok": bool(dev <= tol)}


def suite_preservation(games=("kuhn", "mp-10", "goofspiel4-inc"),
                       config: SolverConfig = SolverConfig()) -> list:
    """Nested solving from an exact equilibrium must not ruin it."""
    out = []
    slack = 5.0 * config.tolerance
    for name in games:
        g = make_game(name)
        bp = epsilon_uniform_blueprint(g, 0.0, config)
        rec = nested_klss_everywhere(g, bp, 1, config=config)
        out.append({"game": name, "blueprint_expl": rec.expl_before,
                    "post_expl": rec.expl_after,
                    "ok": bool(rec.expl_after <= rec.expl_before + slack)})
    return out


def prop1_counterexample(N: int = 100,
                         config: SolverConfig = SolverConfig()) -> dict:
    """Order-1 solving turns a 4/N-exploitable strategy into a fully
    exploitable one on the hidden matching-pennies family.

    The blueprint plays heads with probability 1/2 + 2/N everywhere; each
    order-1 solve sees only one nature draw and deviates to tails, and the
    composed strategy plays tails deterministically."""
    g = make_game(f"hidden-mp-{N}")
    beh = {}
    for I in g.index.infosets[PLUS]:
        p = np.zeros(len(I.actions))
        p[I.actions.index("h")] = 0.5 + 2.0 / N
        p[I.actions.index("t")] = 0.5 - 2.0 / N
        beh[I.index] = p
    bp = behavior_to_sequence(g, PLUS, beh)
    rec = nested_klss_everywhere(g, bp, 1, config=config)
    comp = sequence_to_behavior(g, rec.strategy)
    tails = min(comp[I.index][I.actions.index("t")]
                for I in g.index.infosets[PLUS])
    return {"n": N, "before": rec.expl_before, "after": rec.expl_after,
            "min_tails_prob": float(tails)}
