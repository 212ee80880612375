#!/usr/bin/env python3
"""Print structural statistics (nodes, infosets, diameter, avg |I^k|)."""

import argparse
import sys

from klss.harness import run_table2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--games", nargs="*", default=None)
    ap.add_argument("--ks", type=int, nargs="*", default=[1, 2, 3, 4])
    args = ap.parse_args()

    rows = run_table2(games=args.games, ks=tuple(args.ks))
    cols = ["game", "nodes", "infosets", "diameter"]
    cols += [f"avg_I{k}" for k in args.ks] + ["avg_closure"]
    print(",".join(cols))
    for r in rows:
        print(",".join(
            f"{r[c]:.2f}" if isinstance(r[c], float) else str(r[c])
            for c in cols))
    return 0


if __name__ == "__main__":
    sys.exit(main())
