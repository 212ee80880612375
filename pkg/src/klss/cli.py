"""Command-line front end: catalog stats, solving, gadget inspection,
experiment tables and the safety property suites.

Exit codes: 0 success, 2 usage error, 3 convergence failure, 4 property
violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib
from dataclasses import dataclass, field

from .errors import (BadOrder, BadParameter, DidNotConverge, KlssError,
                     UnknownGame, UnreachableInfoset)
from .equilibrium import SolverConfig, exploitability, game_value, solve
from .games import CATALOG, make_game
from .games.catalog import game_stats
from .harness import (TABLE1_VARIANTS, epsilon_uniform_blueprint,
                      prop1_counterexample, run_table1, run_table2,
                      suite_affine, suite_allocation, suite_preservation,
                      suite_update_monotone)
from .subgame import make_subgame, save_gadget
from .tree import PLUS, load_game, uniform_strategy

EXIT_USAGE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_VIOLATION = 4


def substream(seed: int, name: str) -> int:
    """Named deterministic child seed, so each suite reproduces on its own."""
    return (seed * 1000003 + zlib.crc32(name.encode())) % (2 ** 31)


@dataclass
class RunConfig:
    """Flag- and file-configurable run settings, echoed into every report."""

    seed: int = 0
    tol: float = 1e-9
    iters: int = 100000
    epsilon: float = 0.25
    k: object = 1
    reach: bool = False
    merge_transpositions: bool = False
    jobs: int = 1
    audit: bool = True
    out: str | None = None
    game_file: str | None = None
    cbv_orientation: str = "min"
    engine: str = "lp"

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        cfg = cls()
        if getattr(args, "config", None):
            with open(args.config) as fh:
                loaded = json.load(fh)
            for key, val in loaded.items():
                if not hasattr(cfg, key):
                    raise BadParameter(f"unknown config key {key!r}")
                setattr(cfg, key, val)
        for key in ("seed", "tol", "iters", "epsilon", "k", "reach",
                    "merge_transpositions", "jobs", "audit", "out",
                    "game_file", "cbv_orientation", "engine"):
            val = getattr(args, key, None)
            if val is not None:
                setattr(cfg, key, val)
        if cfg.k == "inf":
            cfg.k = float("inf")
        elif isinstance(cfg.k, str):
            cfg.k = int(cfg.k)
        return cfg

    def solver(self, name: str = "solver") -> SolverConfig:
        return SolverConfig(tolerance=self.tol, max_iters=self.iters,
                            seed=substream(self.seed, name),
                            engine=self.engine,
                            cbv_orientation=self.cbv_orientation)

    def options(self) -> frozenset:
        opts = set()
        if self.reach:
            opts.add("Reach")
        if self.merge_transpositions:
            opts.add("MergeTranspositions")
        return frozenset(opts)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["k"] = "inf" if d["k"] == float("inf") else d["k"]
        return d


def _load(cfg: RunConfig, name: str | None):
    if cfg.game_file:
        return load_game(cfg.game_file)
    if name is None:
        raise UnknownGame("a game name or --game-file is required")
    return make_game(name)


def _find_plus_infoset(g, spec: str):
    """Resolve an infoset argument: full key repr, slash-joined labels, or a
    unique final observation label."""
    infosets = g.index.infosets[PLUS]
    for I in infosets:
        labels = [str(lab) for _, lab in I.key]
        if spec in (repr(I.key), "/".join(labels)):
            return I
    matches = [I for I in infosets if str(I.key[-1][1]) == spec]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise UnreachableInfoset(f"no plus infoset matches {spec!r}")
    raise BadParameter(
        f"{spec!r} is ambiguous; use the slash-joined observation labels")


def _emit(payload, out: str | None):
    text = payload if isinstance(payload, str) else (
        json.dumps(payload, indent=2, default=str) + "\n")
    if out:
        tmp = out + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, out)
    else:
        sys.stdout.write(text)


def cmd_stats(args) -> int:
    cfg = RunConfig.from_args(args)
    g = _load(cfg, args.game)
    stats = game_stats(g)
    stats["game"] = g.name
    if args.json:
        _emit(stats, cfg.out)
    else:
        _emit("game=%s nodes=%d infosets=%d diameter=%s avg_I1=%s\n" % (
            g.name, stats["nodes"], stats["infosets"], stats["diameter"],
            stats.get("avg_I1")), cfg.out)
    return 0


def cmd_solve(args) -> int:
    cfg = RunConfig.from_args(args)
    g = _load(cfg, args.game)
    x, y, gaps = solve(g, g.addends, cfg.solver())
    ex = exploitability(g, x, cfg.tol)
    ey = exploitability(g, y, cfg.tol)
    _emit({"game": g.name, "value": game_value(g, cfg.tol),
           "gap": gaps[0], "plus_exploitability": ex,
           "minus_exploitability": ey, "config": cfg.to_dict()}, cfg.out)
    return 0


def cmd_subgame(args) -> int:
    cfg = RunConfig.from_args(args)
    g = _load(cfg, args.game)
    I = _find_plus_infoset(g, args.infoset)
    if getattr(args, "epsilon", None):
        bp = epsilon_uniform_blueprint(g, cfg.epsilon, cfg.solver())
    else:
        bp = uniform_strategy(g, PLUS)
    gg = make_subgame(g, bp, I, cfg.k, cfg.options(),
                      seed=substream(cfg.seed, "transpositions"))
    if cfg.out:
        save_gadget(gg, cfg.out)
    lines = ["kind=%s order=%s branches=%d" % (
        gg.kind, gg.order, len(gg.branches))]
    for b in gg.branches:
        lines.append("branch %s class=%r members=%d mass=%.6g alt=%.6g" % (
            b.action, b.class_key[-1][1], len(b.members), b.mass, b.alt))
    M = gg.game.payoff_matrix().tocoo()
    for s, t, v in sorted(zip(M.row, M.col, M.data)):
        lines.append("A[%d,%d] = %.10g" % (s, t, v))
    for (s, t), v in sorted(gg.game.addends.entries.items()):
        lines.append("B[%d,%d] = %.10g" % (s, t, v))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_table1(args) -> int:
    cfg = RunConfig.from_args(args)
    report = run_table1(args.games or None, cfg.epsilon,
                        cfg.solver(), variants=args.variants, jobs=cfg.jobs)
    _emit(report.to_csv(), cfg.out)
    if report.failures:
        sys.stderr.write(json.dumps(report.failures, default=str) + "\n")
        return EXIT_NO_CONVERGENCE
    return 0


def cmd_table2(args) -> int:
    cfg = RunConfig.from_args(args)
    rows = run_table2(args.games or None)
    _emit(rows, cfg.out)
    return 0


def cmd_safety(args) -> int:
    cfg = RunConfig.from_args(args)
    suites = (["thm1", "thm2", "thm3", "eps0"] if args.suite == "all"
              else [args.suite])
    ok = True
    results = {}
    for name in suites:
        sc = cfg.solver(name)
        if name == "thm1":
            res = suite_update_monotone(
                args.games or ("kuhn", "mp-10", "fig1"),
                range(args.seeds), cfg.epsilon, sc)
            ok &= all(r["ok"] for r in res)
        elif name == "thm2":
            res = suite_allocation(args.games[0] if args.games else "kuhn",
                                   range(max(args.seeds, 20)), cfg.epsilon, sc)
            ok &= all(r["ok"] for r in res)
        elif name == "thm3":
            res = suite_affine(args.games[0] if args.games else "kuhn",
                               args.n or 25, sc)
            ok &= res["ok"]
        elif name == "eps0":
            res = suite_preservation(
                args.games or ("kuhn", "mp-10", "goofspiel4-inc"), sc)
            ok &= all(r["ok"] for r in res)
        elif name == "prop1":
            res = prop1_counterexample(args.n or 100, sc)
            ok &= res["after"] > res["before"]
        else:
            raise BadParameter(f"unknown suite {name!r}")
        results[name] = res
    _emit({"config": cfg.to_dict(), "results": results, "ok": ok}, cfg.out)
    return 0 if ok else EXIT_VIOLATION


def _add_common(p):
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--audit", action="store_const", const=True)
    p.add_argument("--out")
    p.add_argument("--config")
    p.add_argument("--game-file", dest="game_file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="klss",
        description="Knowledge-limited subgame solving bench")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="structural statistics for a game")
    p.add_argument("game", nargs="?")
    p.add_argument("--json", action="store_true")
    _add_common(p)
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("solve", help="certified equilibrium solve")
    p.add_argument("game", nargs="?")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("subgame", help="build and dump a gadget game")
    p.add_argument("game", nargs="?")
    p.add_argument("infoset")
    p.add_argument("--k", default=None)
    p.add_argument("--reach", action="store_const", const=True)
    p.add_argument("--merge-transpositions", dest="merge_transpositions",
                   action="store_const", const=True)
    _add_common(p)
    p.set_defaults(fn=cmd_subgame)

    p = sub.add_parser("table1", help="blueprint vs post-solve exploitability")
    p.add_argument("games", nargs="*")
    p.add_argument("--variants", action="store_true",
                   help="include the named blueprint variants: %s" %
                        ", ".join(TABLE1_VARIANTS))
    _add_common(p)
    p.set_defaults(fn=cmd_table1)

    p = sub.add_parser("table2", help="structural statistics for the catalog")
    p.add_argument("games", nargs="*")
    _add_common(p)
    p.set_defaults(fn=cmd_table2)

    p = sub.add_parser("safety", help="safety property suites")
    p.add_argument("suite",
                   choices=["thm1", "thm2", "thm3", "eps0", "prop1", "all"])
    p.add_argument("--games", nargs="*")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--n", type=int)
    _add_common(p)
    p.set_defaults(fn=cmd_safety)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DidNotConverge as err:
        sys.stderr.write("did not converge: %s (gap=%s)\n" % (err, err.gap))
        return EXIT_NO_CONVERGENCE
    except (UnknownGame, UnreachableInfoset, BadOrder, BadParameter,
            FileNotFoundError) as err:
        sys.stderr.write("error: %s\n" % err)
        return EXIT_USAGE
    except KlssError as err:
        sys.stderr.write("error: %s\n" % err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
