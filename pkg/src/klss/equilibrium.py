"""Equilibria, best responses and counterfactual best-response values.

The default equilibrium engine solves the sequence-form linear program with
HiGHS; a regret-matching engine (CFR+) is available through SolverConfig.
All reported gaps are certified by the exact best-response oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .errors import BadParameter, DidNotConverge, WrongKind
from .tree import (
    EMPTY_SEQ,
    Game,
    MINUS,
    PLUS,
    PayoffAddends,
    SequenceFormStrategy,
    behavior_to_sequence,
    expected_value,
    sequence_to_behavior,
    validate_strategy,
)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-9
    max_iters: int = 100_000
    seed: int = 0
    epsilon_plus: float = 0.0  # per-infoset uniform floor for plus
    epsilon_minus: float = 0.0
    engine: str = "lp"  # "lp" or "cfr+"
    averaging: str = "linear"
    cbv_orientation: str = "min"

    def __post_init__(self):
        if self.tolerance <= 0:
            raise BadParameter("tolerance must be positive")
        for eps in (self.epsilon_plus, self.epsilon_minus):
            if not 0.0 <= eps <= 1.0:
                raise BadParameter("epsilon must lie in [0, 1]")
        if self.engine not in ("lp", "cfr+"):
            raise BadParameter(f"unknown engine {self.engine!r}")
        if self.cbv_orientation not in ("min", "max"):
            raise BadParameter("cbv orientation must be 'min' or 'max'")


def _full_matrix(game: Game, B: PayoffAddends | None) -> sp.csr_matrix:
    A = game.payoff_matrix()
    B = game.addends if B is None else B
    if B:
        A = sp.csr_matrix(A + B.matrix(*game.n_seq))
    return A


def _gradient(game: Game, B: PayoffAddends | None, opp: SequenceFormStrategy,
              responder: int) -> np.ndarray:
    """Partial derivative of u(x, y) in the responder's sequence vector."""
    M = _full_matrix(game, B)
    if responder == MINUS:
        return np.asarray(opp.values @ M).ravel()
    return np.asarray(M @ opp.values).ravel()


def best_response(game: Game, B: PayoffAddends | None,
                  opp: SequenceFormStrategy, responder: int,
                  ) -> tuple[SequenceFormStrategy, float]:
    """Exact best response via dynamic programming over the sequence tree.

    Returns the responder's strategy and the resulting u(x, y) (always from
    plus's perspective).
    """
    validate_strategy(game, opp)
    idx = game.index
    grad = _gradient(game, B, opp, responder)
    V = grad.astype(float).copy()
    better = max if responder == PLUS else min
    choice = {}
    for I in idx.infosets_bottom_up(responder):
        vals = [V[s] for s in I.seq_ids]
        best = better(vals)
        choice[I.index] = vals.index(best)
        V[I.parent_seq] += best

    x = np.zeros(idx.num_seqs(responder))
    x[EMPTY_SEQ] = 1.0
    for I in sorted(idx.infosets[responder], key=lambda I: len(I.key)):
        x[I.seq_ids[choice[I.index]]] = x[I.parent_seq]
    strat = SequenceFormStrategy(responder, x)
    return strat, float(V[EMPTY_SEQ])


@dataclass
class CounterfactualValueTable:
    """Normalized minus counterfactual best-response values against x."""

    orientation: str
    mass: dict  # infoset index -> reach mass sum p(h) x(h)
    seq_value: dict  # (infoset index, action index) -> u*(x|Ia), reached only
    infoset_value: dict  # infoset index -> u*(x|I), reached only

    def defined(self, infoset: int) -> bool:
        return infoset in self.infoset_value


def _chance_times(game: Game, x: SequenceFormStrategy) -> np.ndarray:
    """Per-node weight p(h) * x(h) for a plus strategy x."""
    t = game.tree
    xs = x.values[game.index.node_seq[PLUS]] if isinstance(
        game.index.node_seq[PLUS], np.ndarray) else np.array(
        [x.values[s] for s in game.index.node_seq[PLUS]])
    return np.asarray(t.chance_reach) * xs


def counterfactual_values(game: Game, B: PayoffAddends | None,
                          x: SequenceFormStrategy,
                          orientation: str = "min") -> CounterfactualValueTable:
    """u*(x|Ia) and u*(x|I) for every reached minus decision infoset.

    u*(x|Ia) is minus's optimal continuation value below (I, a), counting
    chance and plus reach, divided by the reach mass of I.  The infoset
    aggregate applies min (default) or max over actions.
    """
    validate_strategy(game, x)
    idx = game.index
    grad = _gradient(game, B, x, MINUS)
    better = min if orientation == "min" else max
    V = grad.astype(float).copy()
    raw = {}
    for I in idx.infosets_bottom_up(MINUS):
        vals = [V[s] for s in I.seq_ids]
        for a_i, v in enumerate(vals):
            raw[(I.index, a_i)] = v
        V[I.parent_seq] += better(vals)

    w = _chance_times(game, x)
    mass = {}
    seq_value = {}
    infoset_value = {}
    for I in idx.infosets[MINUS]:
        m = float(sum(w[h] for h in I.members))
        mass[I.index] = m
        if m <= 0.0:
            continue
        vals = []
        for a_i in range(len(I.actions)):
            seq_value[(I.index, a_i)] = raw[(I.index, a_i)] / m
            vals.append(seq_value[(I.index, a_i)])
        infoset_value[I.index] = better(vals)
    return CounterfactualValueTable(orientation, mass, seq_value, infoset_value)


def class_cbv(game: Game, B: PayoffAddends | None, x: SequenceFormStrategy,
              class_id: int, orientation: str = "min") -> tuple[float, float]:
    """(reach mass, u*(x|C)) for a minus observation class C.

    The value is minus's optimal play below C against x, normalized by the
    reach mass of C; minus's choices below C are self-contained because
    every minus infoset whose key extends C's key lies entirely below C.
    Returns (0, nan) when the class is unreached.
    """
    idx = game.index
    cls = idx.classes[MINUS][class_id]
    w = _chance_times(game, x)
    mass = float(sum(w[h] for h in cls.members))
    if mass <= 0.0:
        return 0.0, float("nan")

    # the minus sequence at C (shared by all members)
    t_C = idx.node_seq[MINUS][cls.members[0]]

    # restricted gradient: contributions of terminals descending from C
    below = set()
    stack = list(cls.members)
    while stack:
        h = stack.pop()
        below.add(h)
        stack.extend(game.tree.children[h])
    grad = np.zeros(idx.num_seqs(MINUS))
    xs = x.values
    t = game.tree
    key_C = cls.key
    for z in below:
        if t.utility[z] != 0.0:
            grad[idx.node_seq[MINUS][z]] += (
                t.utility[z] * t.chance_reach[z] * xs[idx.node_seq[PLUS][z]])
    if B:
        # payoff addends scoped below C: those sitting on a minus sequence
        # whose infoset key extends C's key
        seq_infoset = {}
        for I in idx.infosets[MINUS]:
            for s in I.seq_ids:
                seq_infoset[s] = I
        for (s, tt), v in B.entries.items():
            I = seq_infoset.get(tt)
            if I is not None and I.key[: len(key_C)] == key_C:
                grad[tt] += v * xs[s]

    better = min if orientation == "min" else max
    restricted = [
        I for I in idx.infosets[MINUS]
        if len(I.key) > len(key_C) and I.key[: len(key_C)] == key_C
    ]
    restricted.sort(key=lambda I: len(I.key), reverse=True)
    V = grad
    for I in restricted:
        V[I.parent_seq] += better(V[s] for s in I.seq_ids)
    return mass, float(V[t_C]) / mass


def game_value(game: Game, tol: float = 1e-9) -> float:
    """Value of the game (with its own addends), cached."""
    if "value" not in game._caches:
        x, y, _ = solve(game, None, SolverConfig(tolerance=tol))
        game._caches["value"] = expected_value(game, None, x, y)
    return game._caches["value"]


def exploitability(game: Game, strat: SequenceFormStrategy,
                   tol: float = 1e-9) -> float:
    """How much below (plus) or above (minus) the game value a best-responding
    opponent can push the payoff."""
    v = game_value(game, tol)
    if strat.player == PLUS:
        _, worst = best_response(game, None, strat, MINUS)
        return v - worst
    _, worst = best_response(game, None, strat, PLUS)
    return worst - v


# ---------------------------------------------------------------------------
# sequence-form linear programming


def _flow_matrices(game: Game, player: int):
    """(F, f): F v = f encodes the realization-plan equalities."""
    idx = game.index
    n = idx.num_seqs(player)
    infosets = idx.infosets[player]
    rows, cols, vals = [0], [EMPTY_SEQ], [1.0]
    for i, I in enumerate(infosets):
        r = i + 1
        for s in I.seq_ids:
            rows.append(r)
            cols.append(s)
            vals.append(1.0)
        rows.append(r)
        cols.append(I.parent_seq)
        vals.append(-1.0)
    F = sp.csr_matrix((vals, (rows, cols)), shape=(len(infosets) + 1, n))
    f = np.zeros(len(infosets) + 1)
    f[0] = 1.0
    return F, f


def uniform_floors(game: Game, player: int, eps: float,
                   exempt=frozenset()) -> list:
    """Floor rows forcing behavior >= eps/m at every non-exempt infoset."""
    out = []
    if eps > 0.0:
        for I in game.index.infosets[player]:
            if I.index in exempt:
                continue
            m = len(I.actions)
            for a_i in range(m):
                out.append((I.index, a_i, eps / m))
    return out


def action_floors(game: Game, player: int, eps: float, label: str) -> list:
    """Floor rows forcing one named action to probability >= eps/m wherever
    it is available (the epsilon-bet / epsilon-fold blueprint shapes)."""
    out = []
    for I in game.index.infosets[player]:
        for a_i, a in enumerate(I.actions):
            if a == label:
                out.append((I.index, a_i, eps / len(I.actions)))
    return out


def _floor_matrix(game: Game, player: int, floors: list):
    """G x <= 0 from rows (infoset, action, c): x(Ia) >= c * x(parent)."""
    idx = game.index
    n = idx.num_seqs(player)
    rows, cols, vals = [], [], []
    for r, (inf_i, a_i, coef) in enumerate(floors):
        I = idx.infosets[player][inf_i]
        rows.append(r)
        cols.append(I.seq_ids[a_i])
        vals.append(-1.0)
        rows.append(r)
        cols.append(I.parent_seq)
        vals.append(coef)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(floors), n))


def solve_margin_tiebreak(game: Game, B: PayoffAddends | None,
                          config: SolverConfig = SolverConfig(),
                          floors: tuple | None = None,
                          ) -> SequenceFormStrategy:
    """Maxmin plus strategy tie-broken by the sum of root-choice values.

    Requires that minus's only move at the root is a single infoset.  Stage
    one computes the ordinary maxmin value v* (the minimum over the root
    actions of the value conceded to plus).  Stage two re-solves, maximizing
    the total value across root actions subject to each staying above v*.
    Entry-choice gadgets have many maxmin-optimal strategies; this picks a
    canonical one that does not give away value on non-binding branches.
    """
    idx = game.index
    roots = [I for I in idx.infosets[MINUS] if I.parent_seq == EMPTY_SEQ]
    if len(roots) != 1:
        raise BadParameter("margin tie-break needs a single minus root infoset")
    root = roots[0]
    if floors is not None and floors[MINUS]:
        raise BadParameter("margin tie-break does not support minus floors")
    x1 = _solve_lp_for(game, B, PLUS, config, floors)
    _, v_star = best_response(game, B, x1, MINUS)
    slack = max(config.tolerance, 1e-9)

    M = _full_matrix(game, B)
    E, e = _flow_matrices(game, PLUS)
    F, _ = _flow_matrices(game, MINUS)
    plus_rows = [] if floors is None else floors[PLUS]
    G_own = _floor_matrix(game, PLUS, plus_rows)
    n_x, n_t = M.shape
    n_w = len(root.seq_ids)
    # p variables: one per minus infoset except the root one (and no scalar
    # for the empty sequence); w variables: one per root action
    keep = [i + 1 for i in range(len(idx.infosets[MINUS])) if i != root.index]
    rows_w = sp.csr_matrix(
        (np.ones(n_w), (range(n_w), root.seq_ids)), shape=(n_w, n_t))
    F2 = sp.vstack([F[keep, :], rows_w], format="csr")
    n_p = len(keep)
    # per-sequence value constraints, skipping the empty minus sequence
    val_rows = sp.hstack([-M.T, F2.T], format="csr")[1:, :]
    A_ub = sp.vstack([
        val_rows,
        sp.hstack([G_own, sp.csr_matrix((G_own.shape[0], n_p + n_w))]),
        sp.hstack([sp.csr_matrix((n_w, n_x + n_p)),
                   sp.csr_matrix(-sp.identity(n_w))]),
    ], format="csr")
    b_ub = np.concatenate([
        np.zeros(val_rows.shape[0] + G_own.shape[0]),
        np.full(n_w, slack - v_star),
    ])
    A_eq = sp.hstack([E, sp.csr_matrix((E.shape[0], n_p + n_w))], format="csr")
    c = np.concatenate([np.zeros(n_x + n_p), -np.ones(n_w)])
    bounds = ([(0, None)] * n_x) + ([(None, None)] * (n_p + n_w))
    res = scipy.optimize.linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=e, bounds=bounds,
        method="highs")
    if not res.success:
        raise DidNotConverge(f"tie-break LP failed: {res.message}",
                             gap=float("nan"))
    x = np.maximum(res.x[:n_x], 0.0)
    return behavior_to_sequence(
        game, PLUS,
        sequence_to_behavior(game, SequenceFormStrategy(PLUS, x)))


def _solve_lp_for(game: Game, B: PayoffAddends | None, player: int,
                  config: SolverConfig,
                  floors: tuple | None = None) -> SequenceFormStrategy:
    """Optimal (restricted) strategy for one player via the sequence-form LP.

    Variables are (x, p, mu): the player's realization plan, the opponent's
    flow multipliers and the multipliers of the opponent's floor rows.  The
    LP maximizes the guaranteed payoff f' p subject to
    F_opp' p + G_opp' mu <= sign * M' x  (mu <= 0), E x = e, G_own x <= 0.
    """
    M = _full_matrix(game, B)
    if player == MINUS:
        M = sp.csr_matrix(-M.T)  # minus maximizes -u; roles swap
    opp = 1 - player
    E, e = _flow_matrices(game, player)
    F, f = _flow_matrices(game, opp)
    if floors is None:
        floors = (
            uniform_floors(game, PLUS, config.epsilon_plus),
            uniform_floors(game, MINUS, config.epsilon_minus),
        )
    G_own = _floor_matrix(game, player, floors[player])
    G_opp = _floor_matrix(game, opp, floors[opp])

    n_x = M.shape[0]
    n_t = M.shape[1]
    n_p = F.shape[0]
    n_mu = G_opp.shape[0]

    # objective: maximize f' p  ->  minimize -f' p
    c = np.concatenate([np.zeros(n_x), -f, np.zeros(n_mu)])
    # inequalities: F' p + G_opp' mu - M' x <= 0 ; G_own x <= 0
    A_ub = sp.vstack([
        sp.hstack([-M.T, F.T, G_opp.T]),
        sp.hstack([G_own, sp.csr_matrix((G_own.shape[0], n_p + n_mu))]),
    ], format="csr")
    b_ub = np.zeros(A_ub.shape[0])
    A_eq = sp.hstack([E, sp.csr_matrix((E.shape[0], n_p + n_mu))], format="csr")
    bounds = ([(0, None)] * n_x) + ([(None, None)] * n_p) + ([(None, 0)] * n_mu)
    res = scipy.optimize.linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=e, bounds=bounds,
        method="highs")
    if not res.success:
        raise DidNotConverge(f"sequence-form LP failed: {res.message}",
                             gap=float("nan"))
    x = np.maximum(res.x[:n_x], 0.0)
    # clean tiny flow violations by renormalizing top-down
    strat = behavior_to_sequence(
        game, player,
        sequence_to_behavior(game, SequenceFormStrategy(player, x)))
    return strat


def solve(game: Game, B: PayoffAddends | None,
          config: SolverConfig = SolverConfig(),
          floors: tuple | None = None,
          ) -> tuple[SequenceFormStrategy, SequenceFormStrategy, tuple]:
    """Equilibrium of the (restricted) game; gap certified by best response.

    floors optionally overrides the config's uniform restriction with
    explicit (infoset, action, coefficient) rows per player.
    Returns (x, y, (gap_plus, gap_minus)) where gap_p is how far below the
    restricted optimum the returned strategy's certified guarantee lies.
    """
    if config.engine == "lp":
        x = _solve_lp_for(game, B, PLUS, config, floors)
        y = _solve_lp_for(game, B, MINUS, config, floors)
    else:
        x, y = _solve_cfr(game, B, config)
    _, vs_x = best_response(game, B, x, MINUS)
    _, vs_y = best_response(game, B, y, PLUS)
    gap = vs_y - vs_x  # >= 0; == 0 iff both optimal in the unrestricted game
    gaps = (float(gap), float(gap))
    if config.engine == "cfr+" and gap > config.tolerance:
        raise DidNotConverge(
            f"cfr+ reached gap {gap:.3g} > tolerance {config.tolerance:.3g}",
            gap=float(gap))
    return x, y, gaps


# ---------------------------------------------------------------------------
# regret-matching engine


def _cfr_behavior(game, player, regrets, eps):
    """Regret-matching+ behavior with the epsilon-uniform reparameterization."""
    idx = game.index
    beh = {}
    for I in idx.infosets[player]:
        r = np.maximum(regrets[I.index], 0.0)
        total = r.sum()
        m = len(I.actions)
        base = r / total if total > 0 else np.full(m, 1.0 / m)
        beh[I.index] = eps / m + (1.0 - eps) * base
    return beh


def _solve_cfr(game: Game, B: PayoffAddends | None, config: SolverConfig):
    idx = game.index
    eps = {PLUS: config.epsilon_plus, MINUS: config.epsilon_minus}
    regrets = {
        p: {I.index: np.zeros(len(I.actions)) for I in idx.infosets[p]}
        for p in (PLUS, MINUS)
    }
    avg = {p: np.zeros(idx.num_seqs(p)) for p in (PLUS, MINUS)}
    weight = 0.0
    cur = {}
    for it in range(1, config.max_iters + 1):
        for p in (PLUS, MINUS):
            cur[p] = behavior_to_sequence(
                game, p, _cfr_behavior(game, p, regrets[p], eps[p]))
        for p in (PLUS, MINUS):
            grad = _gradient(game, B, cur[1 - p], p)
            sign = 1.0 if p == PLUS else -1.0
            # counterfactual values bottom-up on the reparameterized policy
            V = grad.astype(float).copy()
            beh = _cfr_behavior(game, p, regrets[p], eps[p])
            for I in idx.infosets_bottom_up(p):
                vals = np.array([V[s] for s in I.seq_ids])
                node_val = float(beh[I.index] @ vals)
                regrets[p][I.index] = np.maximum(
                    regrets[p][I.index] + sign * (vals - node_val), 0.0)
                V[I.parent_seq] += node_val
        w = float(it) if config.averaging == "linear" else 1.0
        weight += w
        for p in (PLUS, MINUS):
            avg[p] += w * cur[p].values
        if it % 50 == 0 or it == config.max_iters:
            x = SequenceFormStrategy(PLUS, avg[PLUS] / weight)
            y = SequenceFormStrategy(MINUS, avg[MINUS] / weight)
            _, lo = best_response(game, B, x, MINUS)
            _, hi = best_response(game, B, y, PLUS)
            if hi - lo <= config.tolerance:
                return x, y
    return (SequenceFormStrategy(PLUS, avg[PLUS] / weight),
            SequenceFormStrategy(MINUS, avg[MINUS] / weight))


# ---------------------------------------------------------------------------
# equilibrium sampling


def sample_equilibria(game: Game, count: int, seed: int,
                      player: int = MINUS, tol: float = 1e-6,
                      max_attempts: int | None = None) -> list:
    """Distinctly-seeded optimal strategies for one player.

    Each draw perturbs the terminal payoffs by at most 1e-9, solves, and
    keeps the strategy only if it certifies as optimal (exploitability <=
    tol) on the unperturbed game.
    """
    if count < 1:
        raise BadParameter("count must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    attempts = 0
    limit = max_attempts if max_attempts is not None else 20 * count
    base = game.payoff_matrix().tocoo()
    while len(out) < count:
        if attempts >= limit:
            raise DidNotConverge(
                f"only {len(out)}/{count} samples verified", gap=float("nan"))
        attempts += 1
        noise = PayoffAddends()
        for s, t in zip(base.row, base.col):
            noise.add(int(s), int(t), float(rng.uniform(-1e-9, 1e-9)))
        strat = _solve_lp_for(game, noise, player,
                              SolverConfig(seed=int(rng.integers(2**31))))
        if exploitability(game, strat) <= tol:
            out.append(strat)
    return out
