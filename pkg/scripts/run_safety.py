#!/usr/bin/env python3
"""Run the safety property suites and report violations."""

import argparse
import sys

from klss.equilibrium import SolverConfig
from klss.harness import (
    prop1_counterexample,
    suite_affine,
    suite_allocation,
    suite_preservation,
    suite_update_monotone,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()
    config = SolverConfig(tolerance=args.tol, seed=args.seed)

    bad = 0
    for r in suite_update_monotone(config=config):
        print(f"update-monotone {r['game']} seed={r['seed']} ok={r['ok']}")
        bad += not r["ok"]
    for r in suite_allocation(config=config):
        print(f"allocation {r['game']} seed={r['seed']} ok={r['ok']}")
        bad += not r["ok"]
    for game in ("kuhn", "fig1"):
        r = suite_affine(game=game, config=config)
        print(f"affine {r['game']} samples={r['samples']} "
              f"deviation={r['deviation']:.3g} ok={r['ok']}")
        bad += not r["ok"]
    for r in suite_preservation(config=config):
        print(f"preservation {r['game']} post={r['post_expl']:.3g} "
              f"ok={r['ok']}")
        bad += not r["ok"]
    r = prop1_counterexample(config=config)
    ok = abs(r["before"] - 0.04) < 1e-6 and abs(r["after"] - 1.0) < 1e-6
    print(f"order-1 counterexample before={r['before']:.6f} "
          f"after={r['after']:.6f} tails={r['min_tails_prob']:.6f} ok={ok}")
    bad += not ok
    return 4 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
