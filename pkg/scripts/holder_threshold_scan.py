"""Growth of the fractional Hölder ratio on the unit-slope hat profile.

For each (s, alpha) prints the ratio at successive refinements, the measured
growth per refinement and the heuristic 2^(alpha + 2s - 1) for comparison.

    python scripts/holder_threshold_scan.py --n 511 1023 2047 4095
"""

import argparse

import numpy as np

from mixlab import Grid
from mixlab.checks import hat_profile
from mixlab.regularity import fractional_holder_ratio


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[511, 1023, 2047])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--s", type=float, nargs="+", default=list(np.round(np.arange(0.05, 0.5, 0.05), 2)))
    args = ap.parse_args()
    print("s,alpha,alpha_plus_2s,n,ratio,growth,heuristic")
    for s in args.s:
        ratios = [fractional_holder_ratio(hat_profile(Grid(0.0, 1.0, n)), s, args.alpha) for n in args.n]
        total = args.alpha + 2 * s
        heur = 2.0 ** max(total - 1.0, 0.0)
        for k, (n, r) in enumerate(zip(args.n, ratios)):
            growth = r / ratios[k - 1] if k else float("nan")
            print(f"{s},{args.alpha},{total:.2f},{n},{r:.6e},{growth:.4f},{heur:.4f}")


if __name__ == "__main__":
    main()
