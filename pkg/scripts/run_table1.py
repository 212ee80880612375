#!/usr/bin/env python3
"""Run blueprint-vs-post-solve exploitability table and print CSV."""

import argparse
import sys

from klss.equilibrium import SolverConfig
from klss.harness import run_table1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--games", nargs="*", default=None,
                    help="catalog names (default: all seven)")
    ap.add_argument("--epsilon", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--variants", action="store_true",
                    help="include the epsilon-bet / epsilon-fold rows")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None, help="write CSV here")
    args = ap.parse_args()

    config = SolverConfig(tolerance=args.tol, seed=args.seed,
                          epsilon_plus=args.epsilon)
    report = run_table1(games=args.games, eps=args.epsilon, config=config,
                        variants=args.variants, jobs=args.jobs)
    text = report.to_csv(args.out)
    sys.stdout.write(text)
    for f in report.failures:
        print(f"failure: {f}", file=sys.stderr)
    return 3 if report.failures else 0


if __name__ == "__main__":
    sys.exit(main())
