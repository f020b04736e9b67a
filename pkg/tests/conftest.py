import math

import numpy as np
import pytest

from geonet.surfaces import SurfacePoint, make_surface
from geonet.triangle import build_triangle

SQ3 = math.sqrt(3.0)


@pytest.fixture(scope="session")
def plane():
    return make_surface("plane")


@pytest.fixture(scope="session")
def sphere():
    return make_surface("sphere", {"R": 1.0})


@pytest.fixture(scope="session")
def stereo():
    return make_surface("sphere-stereo", {"R": 1.0})


@pytest.fixture(scope="session")
def hyperbolic():
    return make_surface("hyperbolic-disk")


@pytest.fixture(scope="session")
def ellipsoid():
    return make_surface("ellipsoid", {"a": 1.0, "c": 0.8})


@pytest.fixture(scope="session")
def plane_equilateral(plane):
    # A on top so that side BC is the base and x = 1/2 is the median foot
    return build_triangle(plane, SurfacePoint(0.5, SQ3 / 2), SurfacePoint(0.0, 0.0), SurfacePoint(1.0, 0.0))


@pytest.fixture(scope="session")
def octant(stereo):
    # equator points at azimuth 0 and pi/2 plus the north pole (chart origin)
    return build_triangle(stereo, SurfacePoint(1.0, 0.0), SurfacePoint(0.0, 1.0), SurfacePoint(0.0, 0.0))


@pytest.fixture(scope="session")
def equator_triangle(stereo):
    verts = [SurfacePoint(math.cos(a), math.sin(a)) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)]
    return build_triangle(stereo, *verts)


def sphere_equilateral(s, side: float, centre_theta: float = math.pi / 2):
    """Equilateral triangle of the given side length centred on the polar-chart meridian v = 0."""
    # circumradius rho on the unit sphere: sin(side/2) = sin(rho) sin(pi/3)
    rho = math.asin(math.sin(side / 2) / math.sin(math.pi / 3))
    centre = np.array([math.sin(centre_theta), 0.0, math.cos(centre_theta)])
    north = np.array([math.cos(centre_theta), 0.0, -math.sin(centre_theta)])
    east = np.array([0.0, 1.0, 0.0])
    pts = []
    for k in range(3):
        phi = math.pi / 2 + 2 * math.pi * k / 3
        x = math.cos(rho) * centre + math.sin(rho) * (math.cos(phi) * north + math.sin(phi) * east)
        pts.append(SurfacePoint(math.acos(x[2]), math.atan2(x[1], x[0])))
    return build_triangle(s, *pts)


ACCEPTANCE_LINES = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
