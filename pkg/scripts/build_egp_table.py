"""Regenerate the packaged e^GP table (src/lsbec/data/egp_table.txt)."""
import argparse
import sys
import time

from lsbec.egp import EgpTable, default_table_path


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(default_table_path()))
    ap.add_argument("--kappa-min", type=float, default=1e-3)
    ap.add_argument("--kappa-max", type=float, default=1e6)
    ap.add_argument("--per-decade", type=int, default=25)
    args = ap.parse_args(argv)

    t0 = time.time()

    def progress(i, n):
        if i % 25 == 0 or i == n:
            print(f"  {i}/{n} nodes  ({time.time() - t0:.0f}s)", file=sys.stderr)

    table = EgpTable.build(args.kappa_min, args.kappa_max, args.per_decade, progress)
    table.save(args.out)
    print(f"wrote {args.out}  sha256={table.checksum()}")


if __name__ == "__main__":
    main()
