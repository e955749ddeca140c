"""Largest residual change under b0 shifts and S1 rescalings, for every family."""
import argparse
import sys

import numpy as np

from ladderalg.algebra import freedom_invariance, random_rescaling
from ladderalg.catalog import family_ids
from ladderalg.families import instantiate


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", action="append", help="repeatable; default all")
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--n", type=int, default=None, help="grid size (default per family)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'family':20s} {'free2 bS':>10s} {'free1 HSS':>10s} {'free1 closure':>14s}")
    for fid in args.family or family_ids():
        d = freedom_invariance(instantiate(fid, n=args.n), rng.uniform(-5, 5, args.samples),
                               [random_rescaling(rng) for _ in range(args.samples)])
        cl = "n/a" if d["free1_closure"] is None else f"{d['free1_closure']:.2e}"
        print(f"{fid:20s} {d['free2_bS']:10.2e} {d['free1_HSS']:10.2e} {cl:>14s}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
