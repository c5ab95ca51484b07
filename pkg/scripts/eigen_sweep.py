"""Principal eigenvalue and spectral gap of L_t across s and t.

    python scripts/eigen_sweep.py --n 511 > eig_sweep.csv
"""

import argparse

from mixlab import Grid, assemble_mixed, eigengap, principal_eigenpair


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=511)
    ap.add_argument("--s", type=float, nargs="+", default=[0.1, 0.25, 0.5, 0.75, 0.9])
    ap.add_argument("--t", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    args = ap.parse_args()
    grid = Grid(0.0, 1.0, args.n)
    print("s,t,n,lambda1,lambda2,residual")
    for s in args.s:
        base = assemble_mixed(grid, s)
        for t in args.t:
            op = base.with_t(t)
            pair = principal_eigenpair(op)
            lam1, lam2 = eigengap(op, pair=pair)
            print(f"{s},{t},{args.n},{lam1:.12g},{lam2:.12g},{pair.residual:.3e}")


if __name__ == "__main__":
    main()
