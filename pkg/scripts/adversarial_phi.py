"""Search for PL multipliers phi that push the E-lattice certificate toward 1/2.

Only PL multipliers are searched, so a clean run is evidence, not proof, that
no continuous phi does better.
"""

import argparse
import json
import time

from latbp import function_lattices as fl


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ns", default="3,4,5")
    ap.add_argument("--candidates", type=int, default=10_000)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = fl.ELatticeConfig(args.depth)
    for n in map(int, args.ns.split(",")):
        t = time.perf_counter()
        out = fl.adversarial_phi_search(n, cfg, candidates=args.candidates, seed=args.seed + n)
        print(json.dumps({"n": n, "min_value": out["min_value"],
                          "min_minus_half": out["min_minus_half"],
                          "seconds": round(time.perf_counter() - t, 2)}))


if __name__ == "__main__":
    main()
