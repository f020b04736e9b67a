"""Gauss-Bonnet residual against quadrature resolution for a few triangles.

Shows the convergence of the curvature integral toward the angle excess and
where it meets the floor set by the side integration.
"""

import argparse
import math

from geonet.surfaces import SurfacePoint, make_surface
from geonet.triangle import angle_excess, build_triangle, curvature_integral


def cases():
    st = make_surface("sphere-stereo", {"R": 1.0})
    yield "sphere octant (stereo)", build_triangle(st, SurfacePoint(1, 0), SurfacePoint(0, 1), SurfacePoint(0, 0))
    sp = make_surface("sphere", {"R": 1.0})
    yield "sphere (polar)", build_triangle(sp, SurfacePoint(math.pi / 2, 0.1), SurfacePoint(math.pi / 2, 1.6),
                                           SurfacePoint(0.3, 0.5))
    ell = make_surface("ellipsoid", {"a": 1.0, "c": 0.8})
    yield "ellipsoid a=1 c=0.8", build_triangle(ell, SurfacePoint(0.9, 0.0), SurfacePoint(1.5, 0.7),
                                                SurfacePoint(2.0, 0.1))
    hyp = make_surface("hyperbolic-disk")
    yield "hyperbolic disk", build_triangle(hyp, SurfacePoint(-0.5, -0.3), SurfacePoint(0.6, -0.2),
                                            SurfacePoint(0.0, 0.6))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-res", type=int, default=512)
    args = ap.parse_args()
    res = [2 ** k for k in range(1, int(math.log2(args.max_res)) + 1)]
    for name, t in cases():
        ex = angle_excess(t)
        print(f"{name}: angle excess {ex:.12f}")
        for n in res:
            k = curvature_integral(t, n)
            print(f"  n = {n:4d}  integral {k:.12f}  residual {abs(k - ex):.3e}")


if __name__ == "__main__":
    main()
