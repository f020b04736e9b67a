import math

import numpy as np
import pytest

from geonet.geodesics import connect
from geonet.jacobi import monotone_window_check
from geonet.solver import (
    PreconditionError,
    SolverConfig,
    angle_profile,
    descent_balanced,
    fd_gradient,
    find_y_x,
    locate_y_x,
    objective,
    objective_gradient,
    sweep_balanced,
    trace_s_curve,
    verify_balanced,
)
from geonet.suites import interior_point, random_chart_triangle, weiszfeld
from geonet.surfaces import SurfacePoint
from geonet.triangle import TWO_THIRDS_PI, build_triangle, check_preconditions

from conftest import SQ3, sphere_equilateral

FERMAT = (0.5, SQ3 / 6)
OVERRIDE = SolverConfig(override=True)


def xyz(p):
    return np.array([math.sin(p.u) * math.cos(p.v), math.sin(p.u) * math.sin(p.v), math.cos(p.u)])


def euclid_angle(Y, P, Q):
    a, b = np.subtract(P, Y), np.subtract(Q, Y)
    return math.atan2(abs(a[0] * b[1] - a[1] * b[0]), a @ b)


@pytest.fixture(scope="module")
def scalene(plane):
    return build_triangle(plane, SurfacePoint(0, 0), SurfacePoint(1, 0), SurfacePoint(0.3, 0.7))


@pytest.fixture(scope="module")
def small_sphere(sphere):
    return sphere_equilateral(sphere, 0.2)


@pytest.fixture(scope="module")
def hyp_triangle(hyperbolic):
    return build_triangle(hyperbolic, SurfacePoint(-0.3, -0.2), SurfacePoint(0.4, -0.25), SurfacePoint(0.05, 0.45))


# --- Y_X -------------------------------------------------------------------


def test_find_y_x_plane_equilateral(plane_equilateral):
    Y = find_y_x(plane_equilateral, 0.5)
    assert Y.u == pytest.approx(FERMAT[0], abs=1e-7)
    assert Y.v == pytest.approx(FERMAT[1], abs=1e-7)


@pytest.mark.parametrize("x", [0.1, 0.35, 0.8])
def test_find_y_x_defining_equation(scalene, x):
    Y = find_y_x(scalene, x)
    ang = euclid_angle((Y.u, Y.v), (1, 0), (0.3, 0.7))
    assert ang == pytest.approx(TWO_THIRDS_PI, abs=1e-9)


def test_find_y_x_small_sphere_bisection_oracle(small_sphere):
    t = small_sphere
    Y = find_y_x(t, 0.5)
    assert Y.v == pytest.approx(0.0, abs=1e-9)  # on the median by symmetry

    a, b, c = (xyz(p) for p in t.vertices)
    X = (b + c) / np.linalg.norm(b + c)
    d = X - (X @ a) * a
    d /= np.linalg.norm(d)

    def angle_bc(s):
        y = math.cos(s) * a + math.sin(s) * d
        tb, tc = b - (b @ y) * y, c - (c @ y) * y
        return math.acos(np.clip(tb @ tc / np.linalg.norm(tb) / np.linalg.norm(tc), -1, 1))

    lo, hi = 1e-9, math.acos(X @ a)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if angle_bc(mid) < TWO_THIRDS_PI else (lo, mid)
    want = math.cos(lo) * a + math.sin(lo) * d
    assert np.linalg.norm(xyz(Y) - want) <= 1e-7


@pytest.mark.parametrize("x", [0.05, 0.5, 0.95])
def test_y_x_strictly_between(scalene, hyp_triangle, x):
    for t in (scalene, hyp_triangle):
        y = locate_y_x(t, x)
        assert 0.0 < y.s_arc < y.ray_length
        assert abs(y.angle_bc - TWO_THIRDS_PI) <= 1e-7


# --- trace and profile ---------------------------------------------------


def test_trace_symmetric(plane_equilateral):
    tr = trace_s_curve(plane_equilateral, 11)
    assert len(tr.ok) == 11
    us = np.array([r.point.u for r in tr.records])
    vs = np.array([r.point.v for r in tr.records])
    assert np.max(np.abs(us + us[::-1] - 1.0)) <= 1e-7
    assert np.max(np.abs(vs - vs[::-1])) <= 1e-7
    mid = tr.records[5]
    assert (mid.point.u, mid.point.v) == pytest.approx(FERMAT, abs=1e-7)
    for r in tr.records:
        assert abs(r.angles[1] - TWO_THIRDS_PI) <= 1e-7


def test_trace_end_limits(scalene):
    # as x -> 0 the curve approaches side AB, as x -> 1 side AC
    tr = trace_s_curve(scalene, 60)
    first, last = tr.records[0].point, tr.records[-1].point
    assert abs(first.v) < 0.02
    # distance to the line through (0,0) and (0.3,0.7)
    assert abs(0.7 * last.u - 0.3 * last.v) / math.hypot(0.3, 0.7) < 0.02


@pytest.mark.parametrize("n", [0, 1])
def test_trace_needs_two_records(plane_equilateral, n):
    with pytest.raises(ValueError):
        trace_s_curve(plane_equilateral, n)


@pytest.mark.parametrize("which", ["plane", "hyperbolic"])
def test_angle_profile_increasing(which, scalene, hyp_triangle):
    t = scalene if which == "plane" else hyp_triangle
    prof = angle_profile(t, 0.4, 25)
    assert prof.increasing
    assert prof.angles[0] == pytest.approx(t.angles[0])
    # the last sample is X itself on side BC: the angle there is pi
    assert prof.angles[-1] == pytest.approx(math.pi, abs=1e-6)


def test_jacobi_angle_cross_check(sphere):
    t = sphere_equilateral(sphere, 0.8)
    y = locate_y_x(t, 0.3)
    for P in (t.B, t.C):
        g = connect(sphere, P, y.point)
        assert monotone_window_check(sphere, g, g.total_length).ok
    prof = angle_profile(t, 0.3, 41)
    near = np.abs(prof.fractions * y.ray_length - y.s_arc) < 0.2 * y.ray_length
    assert np.all(np.diff(prof.angles)[near[1:]] > 0)


def test_angle_profile_needs_three(plane_equilateral):
    with pytest.raises(ValueError):
        angle_profile(plane_equilateral, 0.5, 2)


# --- solvers -------------------------------------------------------------


def test_sweep_plane_equilateral(plane_equilateral):
    r = sweep_balanced(plane_equilateral)
    assert r.converged and r.inside_triangle and r.method == "sweep"
    assert (r.point.u, r.point.v) == pytest.approx(FERMAT, abs=1e-7)
    assert max(r.angle_residuals) <= 1e-7


def test_descent_plane_equilateral(plane_equilateral):
    r = descent_balanced(plane_equilateral)
    assert r.converged and r.method == "descent"
    assert (r.point.u, r.point.v) == pytest.approx(FERMAT, abs=1e-7)


def test_scalene_matches_weiszfeld(scalene):
    oracle = weiszfeld(np.array([[0, 0], [1, 0], [0.3, 0.7]], float))
    for r in (sweep_balanced(scalene), descent_balanced(scalene)):
        assert r.converged
        assert math.hypot(r.point.u - oracle[0], r.point.v - oracle[1]) <= 1e-6
        assert sum(r.angles) == pytest.approx(2 * math.pi, abs=1e-6)


def test_small_sphere_methods_agree(small_sphere):
    a = sweep_balanced(small_sphere)
    b = descent_balanced(small_sphere)
    assert a.converged and b.converged
    assert math.hypot(a.point.u - b.point.u, a.point.v - b.point.v) <= 1e-6


def test_descent_objective_non_increasing(hyp_triangle):
    r = descent_balanced(hyp_triangle, SurfacePoint(-0.2, -0.15))
    hist = r.diagnostics["objective_history"]
    noise = 1e-10 * max(1.0, hist[0])
    assert all(b <= a + noise for a, b in zip(hist, hist[1:]))
    assert r.converged


def test_uniqueness_probe(hyp_triangle):
    starts = [SurfacePoint(-0.2, -0.15), SurfacePoint(0.3, -0.2), SurfacePoint(0.05, 0.35),
              SurfacePoint(0.0, 0.0), SurfacePoint(0.1, -0.1)]
    pts = []
    for s in starts:
        assert hyp_triangle.contains(s)
        r = descent_balanced(hyp_triangle, s)
        assert r.converged
        pts.append((r.point.u, r.point.v))
    pts = np.array(pts)
    assert np.max(np.linalg.norm(pts - pts[0], axis=1)) <= 1e-5


def test_equator_descent_reaches_pole(equator_triangle):
    with pytest.raises(PreconditionError):
        descent_balanced(equator_triangle)
    r = descent_balanced(equator_triangle, config=OVERRIDE)
    assert r.converged and r.advisory
    assert math.hypot(r.point.u, r.point.v) <= 1e-6
    assert max(r.angle_residuals) <= 1e-6


def test_vertex_minimum(plane):
    t = build_triangle(plane, SurfacePoint(0, 0), SurfacePoint(1, 0.1), SurfacePoint(-1, 0.1))
    assert t.angles[0] > TWO_THIRDS_PI
    with pytest.raises(PreconditionError):
        sweep_balanced(t)
    r = descent_balanced(t, config=OVERRIDE)
    assert not r.converged and not r.inside_triangle
    assert (r.point.u, r.point.v) == (0.0, 0.0)
    oracle = weiszfeld(np.array([[0, 0], [1, 0.1], [-1, 0.1]], float))
    assert math.hypot(*oracle) <= 1e-3


def test_converged_invariants(scalene, hyp_triangle, small_sphere):
    cfg = SolverConfig()
    for t in (scalene, hyp_triangle, small_sphere):
        r = sweep_balanced(t, cfg)
        assert r.converged
        assert max(r.angle_residuals) <= cfg.angle_tol and r.tangent_sum_norm <= cfg.vec_tol
        assert sum(r.angles) == pytest.approx(2 * math.pi, abs=1e-6)


# --- verification --------------------------------------------------------


def test_verify_pole(equator_triangle):
    rep = verify_balanced(equator_triangle, SurfacePoint(0.0, 0.0))
    assert max(rep.angle_residuals) <= 1e-6 and rep.tangent_sum_norm <= 1e-6


def test_verify_plane_centroid(plane_equilateral):
    rep = verify_balanced(plane_equilateral, SurfacePoint(*FERMAT))
    assert max(rep.angle_residuals) <= 1e-9 and rep.tangent_sum_norm <= 1e-9
    assert rep.balanced and rep.equivalent


def test_verify_off_balance(plane_equilateral):
    rep = verify_balanced(plane_equilateral, SurfacePoint(0.5, 0.05))
    assert max(rep.angle_residuals) > 0.1
    assert not rep.angles_pass and not rep.vector_pass and rep.equivalent


def test_residual_families_agree_on_results(scalene, hyp_triangle, small_sphere):
    for t in (scalene, hyp_triangle, small_sphere):
        r = descent_balanced(t)
        rep = verify_balanced(t, r.point)
        assert rep.equivalent and rep.balanced


# --- objective -----------------------------------------------------------


@pytest.mark.parametrize("which", ["plane", "hyperbolic", "sphere", "ellipsoid"])
def test_gradient_matches_fd(which, request):
    s = request.getfixturevalue(which)
    rng = np.random.default_rng(4)
    if which in ("sphere", "ellipsoid"):
        t = sphere_equilateral(s, 0.5) if which == "sphere" else build_triangle(
            s, SurfacePoint(1.2, 0.0), SurfacePoint(1.5, 0.45), SurfacePoint(1.75, 0.0))
    else:
        t = random_chart_triangle(s, rng, (0.0, 0.0), 0.6)
    for _ in range(5):
        Y = interior_point(t, rng)
        an, fd = objective_gradient(t, Y), fd_gradient(t, Y)
        assert np.linalg.norm(fd - an) <= 1e-4 * np.linalg.norm(an)


def test_objective_is_total_distance(scalene):
    Y = SurfacePoint(0.4, 0.2)
    want = sum(math.hypot(Y.u - p.u, Y.v - p.v) for p in scalene.vertices)
    assert objective(scalene, Y) == pytest.approx(want, abs=1e-10)


def test_refusal_without_override(plane):
    t = build_triangle(plane, SurfacePoint(0, 0), SurfacePoint(1, 0.1), SurfacePoint(-1, 0.1))
    rep = check_preconditions(t)
    with pytest.raises(PreconditionError) as info:
        sweep_balanced(t, report=rep)
    assert info.value.report.verdict == "fail"
