"""Residuals of one family on a sequence of grid sizes, with successive reduction ratios."""
import argparse
import csv
import sys

from ladderalg.algebra import verify_family
from ladderalg.families import instantiate

KEYS = ("bS-lower", "bS-raise", "HSS-lower", "HSS-raise", "JJ-lower", "JJ-raise", "closure")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="harmonic-canonical")
    ap.add_argument("--n", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    ap.add_argument("--out", help="CSV path (default: stdout)")
    args = ap.parse_args(argv)
    rows, prev = [], None
    for n in args.n:
        rep = verify_family(instantiate(args.family, n=n))
        res = {k: rep.residuals[k] for k in KEYS if rep.residuals[k] is not None}
        row = {"n": n, "tolerance": rep.tolerance, **res}
        if prev is not None:
            row["min_ratio"] = min(prev[k] / res[k] for k in res if res[k] > 0)
        rows.append(row)
        prev = res
    fields = ["n", "tolerance", *[k for k in KEYS if k in rows[0]], "min_ratio"]
    with (open(args.out, "w", newline="") if args.out else sys.stdout) as fh:
        w = csv.DictWriter(fh, fields, restval="")
        w.writeheader()
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
