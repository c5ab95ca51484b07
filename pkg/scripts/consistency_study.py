"""Convergence of the discrete fractional Laplacian against a closed form.

Applies the assembled matrix to (1 - x^2)_+^(1+s) on (-1, 1) and compares the
centre node with the known value; prints errors and observed orders.

    python scripts/consistency_study.py --s 0.25 0.5 0.75
"""

import argparse

import numpy as np

from mixlab import Grid, assemble_fractional
from mixlab.checks import bump_fractional_laplacian


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    ap.add_argument("--levels", type=int, default=6, help="n = 2^k - 1 for k = 5 .. 4 + levels")
    args = ap.parse_args()
    print("s,n,centre_error,order")
    for s in args.s:
        prev = None
        for k in range(5, 5 + args.levels):
            grid = Grid(-1.0, 1.0, 2**k - 1)
            v = assemble_fractional(grid, s) @ (1.0 - grid.nodes**2) ** (1 + s)
            mid = grid.n // 2
            err = abs(v[mid] - float(bump_fractional_laplacian(grid.nodes[mid], s)))
            order = np.log2(prev / err) if prev else float("nan")
            print(f"{s},{grid.n},{err:.6e},{order:.3f}")
            prev = err


if __name__ == "__main__":
    main()
