"""Dump the Y_X curve and angle profiles of a scenario as CSV for plotting.

Writes <out>/<name>_trace.csv (Y_X for n values of x_param) and
<out>/<name>_profile_xNN.csv (angle BYC along the geodesic A -> X) for a few x.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from geonet.runner import PROFILE_COLUMNS, TRACE_COLUMNS, profile_rows, trace_rows
from geonet.scenario import load_scenario


def write(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        w.writeheader()
        w.writerows(r for r in rows if "error" not in r)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario")
    ap.add_argument("--n", type=int, default=41, help="trace records")
    ap.add_argument("--profile-n", type=int, default=65)
    ap.add_argument("--x", type=float, nargs="*", default=[0.25, 0.5, 0.75])
    ap.add_argument("--out", default="curves")
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    _, rows = trace_rows(sc, args.n)
    write(out / f"{sc.name}_trace.csv", TRACE_COLUMNS, rows)
    good = [r for r in rows if "error" not in r]
    aby = np.array([r["angle_AYB"] for r in good]) - 2 * np.pi / 3
    flips = np.flatnonzero(np.diff(np.sign(aby)))
    print(f"{sc.name}: {len(good)}/{len(rows)} trace records; angle AYB - 2pi/3 changes sign "
          f"{len(flips)} time(s)")

    for x in args.x:
        head, prow = profile_rows(sc, x, args.profile_n)
        write(out / f"{sc.name}_profile_x{int(round(100 * x)):02d}.csv", PROFILE_COLUMNS, prow)
        print(f"  x = {x:.2f}: angle BYC increasing along the ray: {head['increasing']}")


if __name__ == "__main__":
    main()
