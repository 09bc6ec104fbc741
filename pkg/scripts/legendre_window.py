"""Total Legendre occupation sum_j ceil(N_{g,mu}(l_j)) / N along lambda_N = N^(-1/4).

With nu = rho = 1 the activity schedule fixes g_N = pi^2 lambda / (ln lambda)^2;
the calibrated mu_N then reproduces lambda_N.
"""
import argparse
import csv
import math
import sys

import numpy as np

from lsbec.allocation import allocate_legendre, calibrate_mu
from lsbec.gp import PI2
from lsbec.landscape import sample_decomposition


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[10**3, 10**4, 10**5, 10**6])
    ap.add_argument("--exponent", type=float, default=0.25)
    ap.add_argument("--realizations", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["N", "lambda", "g", "mu", "ratio_median", "ratio_min", "ratio_max"])
    for N in args.N:
        lam = N ** -args.exponent
        g = PI2 * lam / math.log(lam) ** 2
        cal = calibrate_mu(g, 1.0, 1.0)
        r = np.array([allocate_legendre(sample_decomposition(1.0, 1.0, N, seed=(args.seed, 8, N, k)), cal).total / N
                      for k in range(args.realizations)])
        w.writerow([N, repr(cal.lam), repr(g), repr(cal.mu), repr(float(np.median(r))),
                    repr(float(r.min())), repr(float(r.max()))])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
