"""Total distance F and unit-tangent sum near the pole for the equator triangle.

The pole is balanced although the triangle fails the angle and diameter
hypotheses. F is flat to second order there, so this prints F - F(pole) and
|S| along rays from the pole to show how the landscape behaves.
"""

import argparse
import math

import numpy as np

from geonet.solver import objective, tangent_sum
from geonet.surfaces import SurfacePoint, make_surface
from geonet.triangle import build_triangle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=6)
    args = ap.parse_args()

    st = make_surface("sphere-stereo", {"R": 1.0})
    verts = [SurfacePoint(math.cos(a), math.sin(a)) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)]
    t = build_triangle(st, *verts)
    pole = SurfacePoint(0.0, 0.0)
    f0 = objective(t, pole)
    print(f"F(pole) = {f0:.12f}  (3 pi / 2 = {1.5 * math.pi:.12f})")
    print(f"|S(pole)| = {st.norm(tangent_sum(t, pole)):.3e}")
    radii = [1e-3, 1e-2, 5e-2, 1e-1, 2e-1]
    print("direction   " + "  ".join(f"r={r:<8g}" for r in radii))
    for k in range(args.rays):
        phi = math.pi * k / args.rays
        vals = []
        for r in radii:
            Y = SurfacePoint(r * math.cos(phi), r * math.sin(phi))
            vals.append(objective(t, Y) - f0)
        print(f"phi={phi:5.3f}   " + "  ".join(f"{v: .2e}" for v in vals))
    # the chart radius r is tan(d / 2) for geodesic distance d from the pole
    print("cubic check: (F - F0) / r^3 along phi = 0:",
          np.round([(objective(t, SurfacePoint(r, 0.0)) - f0) / r**3 for r in radii[:3]], 4))


if __name__ == "__main__":
    main()
