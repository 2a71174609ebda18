"""Run validation suites and print the residual table; optionally write JSON.

    python scripts/run_validation.py                     # every suite
    python scripts/run_validation.py kummer fpt --out results.json
"""

import argparse
import json

from qinvariant.validation import SUITES, run_suite


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("suites", nargs="*", default=list(SUITES))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--paths", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()
    rows = []
    for name in args.suites:
        res = run_suite(name, seed=args.seed, n_paths=args.paths)
        n_fail = sum(not c.passed for c in res.checks)
        print(f"== {name}: {len(res.checks) - n_fail}/{len(res.checks)} passed in {res.seconds:.1f} s")
        for c in res.checks:
            print(f"   {'PASS' if c.passed else 'FAIL'}  {c.name:40s} residual {c.residual:10.3g}  tol {c.tolerance:g}  {c.detail}")
        rows += [c.row() for c in res.checks]
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=1, default=float)


if __name__ == "__main__":
    main()
