"""Quadratic benchmark sweep: every condition number and documented seed."""

import argparse
import json

from hbpl.cli import EXAMPLE1_KAPPAS, EXAMPLE1_SEEDS, repro_example1


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="repro/example1")
    p.add_argument("--kappa", type=int, nargs="*", default=list(EXAMPLE1_KAPPAS))
    p.add_argument("--seeds", type=int, nargs="*", default=list(EXAMPLE1_SEEDS))
    args = p.parse_args()
    rows = []
    for kappa in args.kappa:
        for seed in args.seeds:
            s = repro_example1(kappa, seed=seed, out_dir=args.out)
            rows.append({"kappa": kappa, "seed": seed, "ranking": s["ranking_time_to_1e-6"],
                         "passed": s["passed"]})
            print(json.dumps(rows[-1]))
    raise SystemExit(0 if all(r["passed"] for r in rows) else 1)


if __name__ == "__main__":
    main()
