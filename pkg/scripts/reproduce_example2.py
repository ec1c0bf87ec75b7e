"""Sin-valley runs from all three starting points, with full paths for level-set plots."""

import argparse
import json

from hbpl.cli import EXAMPLE2_STARTS, repro_example2


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="repro/example2")
    args = p.parse_args()
    ok = True
    for start in EXAMPLE2_STARTS:
        s = repro_example2(start, out_dir=args.out)
        ok &= s["passed"]
        gaps = {k: v["final_gap"] for k, v in s["curves"].items()}
        print(json.dumps({"start": s["start"], "L_sublevel": s["L_sublevel"], "final_gap": gaps,
                          "passed": s["passed"]}))
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
