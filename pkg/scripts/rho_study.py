"""Compare rho_eps(M) with rho_eps(M^T) on l2 and rho at eps = bp against bp.

The second table only reports numbers: whether a small BP defect forces
membership in a center with finite radius is left open.
"""

import argparse
import math

import numpy as np

from latbp import operators as op
from latbp.lattice import L2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    print(f"{'k':>3} {'n':>2} {'eps':>8} {'rho(M)':>10} {'rho(M^T)':>10} {'bp':>8} {'rho@bp':>10}")
    for k in range(args.instances):
        n = int(rng.integers(2, 5))
        M = rng.uniform(-1, 1, (n, n))
        eps = op.dist_to_diagonal(M, L2).value * float(rng.uniform(1.0, 1.5))
        a = op.rho_center(M, L2, eps, seed=k)
        b = op.rho_center(M.T, L2, eps, seed=k)
        worst = max(worst, abs(a.rho_upper - b.rho_upper))
        bp = op.bp_defect(M, L2).value
        at_bp = op.rho_center(M, L2, bp, seed=k).rho_upper
        shown = "inf" if math.isinf(at_bp) else f"{at_bp:10.6f}"
        print(f"{k:3d} {n:2d} {eps:8.4f} {a.rho_upper:10.6f} {b.rho_upper:10.6f} {bp:8.4f} {shown:>10}")
    print(f"max |rho(M) - rho(M^T)| = {worst:.2e}")


if __name__ == "__main__":
    main()
