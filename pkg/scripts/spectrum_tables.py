"""Ladder against direct spectra for every family, printed as aligned tables."""
import argparse
import sys

from ladderalg.catalog import family_ids
from ladderalg.errors import LadderError
from ladderalg.families import instantiate
from ladderalg.spectra import compare


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, complex):
        v = v.real
    return f"{v:.8g}" if isinstance(v, float) else str(v)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", action="append", help="repeatable; default all")
    ap.add_argument("--k", type=int, default=None)
    args = ap.parse_args(argv)
    for fid in args.family or family_ids():
        print(f"== {fid}")
        try:
            c = compare(instantiate(fid, k=args.k))
        except LadderError as exc:
            print(f"   error: {exc}")
            continue
        rows = c.rows()
        cols = list(rows[0])
        print("  " + " ".join(f"{h:>16s}" for h in cols))
        for r in rows:
            print("  " + " ".join(f"{_cell(r[h]):>16s}" for h in cols))
        if c.stopped:
            print(f"   stopped: {c.stopped}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
