"""Worst-case exponents against the condition number, written as CSV."""

import argparse
import csv
import sys

import numpy as np

from hbpl.certificates import compare_factors


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--kappa-max", type=float, default=20.0)
    p.add_argument("--n", type=int, default=200)
    args = p.parse_args()
    w = csv.writer(sys.stdout)
    w.writerow(["kappa", "heavy_ball", "gradient_flow", "qg_unique_minimizer", "qsc_unique_minimizer"])
    for kappa in np.geomspace(1.0, args.kappa_max, args.n):
        c = compare_factors(kappa * args.mu, args.mu)
        w.writerow([repr(float(kappa)), c.heavy_ball, c.gradient_flow, c.qg_unique_minimizer,
                    c.qsc_unique_minimizer])


if __name__ == "__main__":
    main()
