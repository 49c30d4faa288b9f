"""
Risk-reward frontier for several horizons, written as one CSV.

    python scripts/frontier_sweep.py --p 0.7,0.3 --qb 0.5,0.5 --n 10,20,50,100
"""

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from finitekelly.cli import FRONTIER_COLUMNS, parse_grid
from finitekelly.divergence import Dist
from finitekelly.fileio import dumps_csv, write_text
from finitekelly.kelly import frontier


def _floats(text):
    return [float(s) for s in text.split(",")]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--p", type=_floats, default=[0.7, 0.3])
    ap.add_argument("--qb", type=_floats, default=[0.5, 0.5])
    ap.add_argument("--n", default="10,20,50,100,1000")
    ap.add_argument("--eps-grid", default="0.01:0.99:0.02")
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    p, qb = Dist(args.p), Dist(args.qb)
    horizons = [int(s) for s in args.n.split(",")]
    eps = parse_grid(args.eps_grid)
    with ThreadPoolExecutor(args.threads) as pool:
        blocks = list(pool.map(lambda n: frontier(p, qb, n, eps), horizons))
    rows = [dict(n=n, **r) for n, block in zip(horizons, blocks) for r in block]
    write_text(dumps_csv(rows, ("n",) + FRONTIER_COLUMNS), args.out)

    # quick sanity read-out on stderr: reward at the median epsilon per horizon
    mid = eps[len(eps) // 2]
    for n, block in zip(horizons, blocks):
        r = next(r for r in block if r["epsilon"] == mid)
        print(f"n={n:>6}  eps={mid:.2f}  reward={r['reward_bits']:.5f} bits", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
