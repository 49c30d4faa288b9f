"""
How far the continuous (tilted-family) optimum sits above the exact best type.

For each horizon n, the exact discrete optimum enumerates all types whose class
probability clears epsilon; the continuous solver relaxes the type to the
whole simplex with budget -log2(epsilon)/n. The gap should shrink with n.
"""

import argparse
import json
import sys

from finitekelly.divergence import Dist
from finitekelly.kelly import InfeasibleError, best_type_under_risk, solve_risk_constrained


def main(argv=None):
    ap = argparse.ArgumentParser(description="discrete vs continuous risk-constrained optimum")
    ap.add_argument("--p", default="0.7,0.3")
    ap.add_argument("--qb", default="0.5,0.5")
    ap.add_argument("--epsilon", type=float, default=1e-3)
    ap.add_argument("--n", default="10,30,100,300,1000,3000")
    args = ap.parse_args(argv)

    p = Dist([float(s) for s in args.p.split(",")])
    qb = Dist([float(s) for s in args.qb.split(",")])
    out = []
    for n in (int(s) for s in args.n.split(",")):
        cont = solve_risk_constrained(p, qb, args.epsilon, n).reward_bits_per_round
        try:
            t, disc = best_type_under_risk(p, qb, n, args.epsilon)
            counts = list(t.counts)
        except InfeasibleError:
            disc, counts = None, None
        gap = None if disc is None else cont - disc
        out.append(dict(n=n, continuous_bits=cont, discrete_bits=disc, best_counts=counts, gap_bits=gap))
        print(f"n={n:>5}  continuous={cont:.5f}  discrete={disc if disc is None else round(disc, 5)}  gap={gap}",
              file=sys.stderr)
    json.dump(dict(epsilon=args.epsilon, p=p.tolist(), qb=qb.tolist(), rows=out), sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
