"""Acceptance criteria, one test per criterion, each at its stated tolerance."""

import math
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from geonet.geodesics import NonUniqueGeodesicError, connect, shoot
from geonet.jacobi import comparison_gap, monotone_window_check, norm_sq_prime, solve_jacobi
from geonet.runner import EXIT_REFUSED, run_scenario
from geonet.scenario import load_scenario
from geonet.solver import SolverConfig, descent_balanced
from geonet.suites import SUITES, _ellipsoid_triangles
from geonet.surfaces import SurfacePoint, TangentVector, make_surface
from geonet.triangle import (
    angle_excess,
    build_triangle,
    check_preconditions,
    curvature_integral,
    gauss_bonnet_residual,
)

from conftest import record_criterion

SEED = 0
SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def unit_sphere():
    return make_surface("sphere", {"R": 1.0})


@pytest.fixture(scope="module")
def equator_geodesic(unit_sphere):
    p = SurfacePoint(math.pi / 2, 0.0)
    return shoot(unit_sphere, p, TangentVector(p, 0.0, 1.0), 3.2)


def test_criterion_01_sphere_jacobi_closed_form(unit_sphere, equator_geodesic):
    J = solve_jacobi(unit_sphere, equator_geodesic, 0.0, 1.0)
    tt = np.concatenate([J.t[J.t <= 3.0], np.linspace(0, 3, 601)])
    err = float(np.max(np.abs(J.value(tt) - np.sin(tt))))
    nsp = float(norm_sq_prime(J, math.pi / 4))
    ok = err <= 1e-7 and abs(nsp - 1.0) <= 1e-6
    record_criterion(1, "sphere Jacobi field = sin t; (|J|^2)'(pi/4) = 1", ok,
                     f"max error {err:.2e}, (|J|^2)'(pi/4) - 1 = {nsp - 1:.2e}")
    assert ok


def test_criterion_02_monotone_window_boundary(unit_sphere, equator_geodesic):
    inside = monotone_window_check(unit_sphere, equator_geodesic, 1.55)
    outside = monotone_window_check(unit_sphere, equator_geodesic, 1.60)
    ok = inside.ok and not outside.ok
    record_criterion(2, "monotone window true at 1.55, false at 1.60", ok,
                     f"margins {inside.margin:.3g} / {outside.margin:.3g}")
    assert ok


def test_criterion_03_gauss_bonnet():
    st = make_surface("sphere-stereo", {"R": 1.0})
    octant = build_triangle(st, SurfacePoint(1.0, 0.0), SurfacePoint(0.0, 1.0), SurfacePoint(0.0, 0.0))
    r_oct = gauss_bonnet_residual(octant, 256)
    integral, excess = curvature_integral(octant, 256), angle_excess(octant)
    plane = make_surface("plane")
    tri = build_triangle(plane, SurfacePoint(0.0, 0.0), SurfacePoint(1.3, 0.2), SurfacePoint(0.4, 0.9))
    r_plane = gauss_bonnet_residual(tri, 256)
    ok = (r_oct <= 1e-4 and r_plane <= 1e-10
          and abs(integral - math.pi / 2) <= 1e-4 and abs(excess - math.pi / 2) <= 1e-4)
    record_criterion(3, "Gauss-Bonnet: octant <= 1e-4 at 256, plane <= 1e-10", ok,
                     f"octant {r_oct:.2e}, plane {r_plane:.2e}")
    assert ok


def test_criterion_04_plane_weiszfeld_oracle():
    res, dt = timed(SUITES["plane-fermat"], SEED)
    worst = max(c.value for c in res.cases)
    ok = res.passed == 100 and res.total == 100
    record_criterion(4, "100 planar triangles: sweep and descent match Weiszfeld within 1e-6", ok,
                     f"{res.passed}/{res.total}, worst {worst:.2e}, {dt:.0f}s")
    assert ok


def test_criterion_05_equator_triangle():
    st = make_surface("sphere-stereo", {"R": 1.0})
    verts = [SurfacePoint(math.cos(a), math.sin(a)) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)]
    tri = build_triangle(st, *verts)
    rep = check_preconditions(tri, 16)
    r = descent_balanced(tri, config=SolverConfig(override=True), report=rep)
    angle_dev = max(abs(a - 2 * math.pi / 3) for a in r.angles)
    pole = math.hypot(r.point.u, r.point.v)
    ok = (r.converged and pole <= 1e-6 and angle_dev <= 1e-6 and rep.verdict == "fail"
          and all(abs(a - math.pi) <= 1e-6 for a in tri.angles) and rep.diameter_estimate >= math.pi / 2)
    record_criterion(5, "equator triangle: descent reaches the pole, hypotheses fail", ok,
                     f"|Y| = {pole:.1e}, angle deviation {angle_dev:.1e}, diameter {rep.diameter_estimate:.3f}")
    assert ok


def test_criterion_06_antipodal_vertices(unit_sphere):
    try:
        connect(unit_sphere, SurfacePoint(math.pi / 2, 0.0), SurfacePoint(math.pi / 2, math.pi))
        flagged = False
    except NonUniqueGeodesicError:
        flagged = True
    _, code = run_scenario(load_scenario(SCENARIOS / "sphere-antipodal.json"))
    ok = flagged and code == EXIT_REFUSED
    record_criterion(6, "antipodal vertices: non-unique side, refusal exit code", ok, f"exit {code}")
    assert ok


@pytest.mark.parametrize("suite, label", [
    ("existence-nonpositive", "a: hyperbolic disk"),
    ("existence-sphere", "b: unit sphere"),
    ("existence-ellipsoid", "c: ellipsoid with K <= 1/R^2"),
])
def test_criterion_07_existence(suite, label):
    res, dt = timed(SUITES[suite], SEED)
    ok = res.passed == 50 and res.total == 50
    record_criterion(7, f"existence battery {label}: 50/50 converge", ok, f"{res.passed}/{res.total}, {dt:.0f}s")
    assert ok


def test_criterion_08_comparison_inequality():
    ell, tris = _ellipsoid_triangles(SEED, "existence-ellipsoid", 50)
    R = ell.bound_radius
    worst, n = math.inf, 0
    for t, _ in tris:
        for g in t.sides:
            if g.total_length < R * math.pi / 2:
                worst = min(worst, float(np.min(comparison_gap(ell, g, R))))
                n += 1
    ok = n > 0 and worst >= -1e-6
    record_criterion(8, "ellipsoid: (|J|^2)' >= 2R sin(t/R) cos(t/R) - 1e-6 at every node", ok,
                     f"{n} geodesics, min gap {worst:.2e}")
    assert ok


def test_criterion_09_index_lemma():
    res = SUITES["index-lemma"](SEED)
    pl = [c for c in res.cases if c.name.startswith("pl-")]
    ok = res.ok and len(pl) == 20
    record_criterion(9, "index lemma: 20 piecewise-linear fields satisfy I(V,V) >= I(J,J) - 1e-6", ok,
                     f"{res.passed}/{res.total}, min I(V,V) - I(J,J) = {min(c.value for c in pl):.3g}")
    assert ok


def test_criterion_10_gradient():
    res = SUITES["gradient"](SEED)
    worst = max(c.value for c in res.cases)
    ok = res.ok and res.total == 80
    record_criterion(10, "FD gradient = -(unit tangent sum) within 1e-4 relative, 4 families x 20", ok,
                     f"{res.passed}/{res.total}, worst {worst:.2e}")
    assert ok


def test_criterion_11_determinism(tmp_path):
    exe = shutil.which("geonet")
    cmd = [exe] if exe else [sys.executable, "-m", "geonet.cli"]
    runs = [subprocess.run(cmd + ["verify", "--filter", "gauss-bonnet", "--seed", "7"],
                           capture_output=True, check=False) for _ in range(2)]
    ok = all(r.returncode == 0 for r in runs) and runs[0].stdout == runs[1].stdout and len(runs[0].stdout) > 0
    record_criterion(11, "repeated verify runs are byte-identical", ok, f"{len(runs[0].stdout)} bytes")
    assert ok
