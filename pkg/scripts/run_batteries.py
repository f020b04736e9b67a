"""Run the built-in verification suites and tabulate pass counts and timings.

    python scripts/run_batteries.py --seed 0 --out batteries.json
    python scripts/run_batteries.py existence-sphere gradient
"""

import argparse
import json
import time

from geonet.suites import SUITES


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("suites", nargs="*", help="suite names (default: all)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="write the full per-case results as JSON")
    args = ap.parse_args()

    names = args.suites or list(SUITES)
    rows = []
    for name in names:
        t0 = time.perf_counter()
        res = SUITES[name](args.seed)
        dt = time.perf_counter() - t0
        print(f"{name:24s} {res.passed:4d}/{res.total:<4d} {'PASS' if res.ok else 'FAIL'}  {dt:6.1f}s", flush=True)
        for c in res.cases:
            if not c.ok:
                print(f"    failed {c.name}: {c.value} {c.detail}")
        rows.append({**res.to_dict(), "seconds": dt})
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"seed": args.seed, "suites": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
