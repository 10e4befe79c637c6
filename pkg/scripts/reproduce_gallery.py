"""Rebuild the named examples (antidiagonal, Walsh) and print a compact table."""

import argparse
import json

from latbp import gallery


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-i", type=int, default=10)
    ap.add_argument("--json", action="store_true", help="dump full JSON instead of the table")
    args = ap.parse_args()

    rows = {"antidiagonal": [], "walsh": []}
    for eps in (0.01, 0.1, 1.0):
        out = gallery.antidiagonal_example(eps)
        for lab, d in out["specs"].items():
            inv = d["inverse"]
            rows["antidiagonal"].append({"eps": eps, "norm": lab, "bp": inv["bp"],
                                         "bp_inverse": inv["bp_inverse"], "ratio": inv["ratio"]})
    for i in range(2, args.max_i + 1):
        w = gallery.walsh_modulus_example(i)
        rows["walsh"].append({k: w[k] for k in ("i", "size", "gap", "norm_T_minus_I", "bp_ratio_lower")})

    if args.json:
        print(json.dumps(rows, indent=2, sort_keys=True))
        return
    print(f"{'eps':>6} {'norm':>5} {'bp':>10} {'bp(M^-1)':>10} {'ratio':>6}")
    for r in rows["antidiagonal"]:
        print(f"{r['eps']:6g} {r['norm']:>5} {r['bp']:10.6g} {r['bp_inverse']:10.6g} {r['ratio']:6.3f}")
    print()
    print(f"{'i':>3} {'n':>5} {'gap':>8} {'||T-I||':>10} {'bp(|T|)/bp(T) >=':>18}")
    for r in rows["walsh"]:
        print(f"{r['i']:3d} {r['size']:5d} {r['gap']:8.5f} {r['norm_T_minus_I']:10.6f} "
              f"{r['bp_ratio_lower']:18.3f}")


if __name__ == "__main__":
    main()
