import math

import numpy as np
import pytest
import sympy as sp_
from hypothesis import given, settings, strategies as st

from geonet.surfaces import (
    DomainError,
    SurfaceError,
    SurfacePoint,
    TangentVector,
    angle_between_vectors,
    christoffel_at,
    curvature_at,
    make_surface,
    metric_at,
)

BUILTINS = {
    "plane": ("plane", {}),
    "sphere": ("sphere", {"R": 1.0}),
    "sphere-R2": ("sphere", {"R": 2.0}),
    "stereo": ("sphere-stereo", {"R": 1.0}),
    "hyperbolic": ("hyperbolic-disk", {"a": 1.0}),
    "ellipsoid": ("ellipsoid", {"a": 1.0, "c": 0.8}),
    "prolate": ("ellipsoid", {"a": 0.7, "c": 1.2}),
    "user-sphere": ("user", {"g11": "1", "g12": "0", "g22": "sin(u)^2",
                             "domain": {"u": [0.05, 3.09], "v": [-10, 10]}}),
}


def chart_box(s):
    """A bounded rectangle well inside the chart domain."""
    if s.kind == "plane":
        return (-3, 3), (-3, 3)
    if s.kind in ("sphere", "ellipsoid"):
        return (0.1, math.pi - 0.1), (0, 2 * math.pi)
    if s.kind == "sphere-stereo":
        return (-3, 3), (-3, 3)
    if s.kind == "hyperbolic-disk":
        return (-0.65, 0.65), (-0.65, 0.65)
    return (0.1, 3.0), (-3, 3)


@pytest.fixture(scope="module", params=sorted(BUILTINS))
def surface(request):
    kind, params = BUILTINS[request.param]
    return make_surface(kind, params)


def fd_christoffel(s, u, v, h=1e-5):
    """Christoffel symbols from central differences of the metric (independent oracle)."""
    g = s.metric_array([u], [v])[0]
    gu = (s.metric_array([u + h], [v])[0] - s.metric_array([u - h], [v])[0]) / (2 * h)
    gv = (s.metric_array([u], [v + h])[0] - s.metric_array([u], [v - h])[0]) / (2 * h)
    G = np.array([[g[0], g[1]], [g[1], g[2]]])
    dG = [np.array([[gu[0], gu[1]], [gu[1], gu[2]]]), np.array([[gv[0], gv[1]], [gv[1], gv[2]]])]
    inv = np.linalg.inv(G)
    out = np.zeros((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                out[k, i, j] = 0.5 * sum(inv[k, l] * (dG[i][l, j] + dG[j][l, i] - dG[l][i, j]) for l in range(2))
    return out


def test_spd_on_random_points(surface):
    rng = np.random.default_rng(11)
    (u0, u1), (v0, v1) = chart_box(surface)
    us = rng.uniform(u0, u1, 1000)
    vs = rng.uniform(v0, v1, 1000)
    if surface.kind == "sphere-stereo" or surface.kind == "hyperbolic-disk":
        keep = np.hypot(us, vs) < (0.95 if surface.kind == "hyperbolic-disk" else 40)
        us, vs = us[keep], vs[keep]
    g = surface.metric_array(us, vs)
    assert np.all(g[:, 0] > 0)
    assert np.all(g[:, 0] * g[:, 2] - g[:, 1] ** 2 > 0)


def test_christoffel_matches_finite_differences(surface):
    (u0, u1), (v0, v1) = chart_box(surface)
    worst = 0.0
    for u in np.linspace(u0, u1, 20):
        for v in np.linspace(v0, v1, 20):
            p = SurfacePoint(float(u), float(v))
            if not surface.contains(p):
                continue
            c = christoffel_at(surface, p)
            fd = fd_christoffel(surface, p.u, p.v)
            for k in range(2):
                for i in range(2):
                    for j in range(2):
                        worst = max(worst, abs(c[f"{k + 1}_{i + 1}{j + 1}"] - fd[k, i, j]))
    assert worst <= 1e-6


def test_christoffel_lower_symmetry(surface):
    c = christoffel_at(surface, SurfacePoint(0.3, 0.2) if surface.kind != "sphere" else SurfacePoint(1.0, 0.2))
    assert c["1_12"] == c["1_21"] and c["2_12"] == c["2_21"]


def test_plane_symbols_vanish(plane):
    c = christoffel_at(plane, SurfacePoint(1.3, -2.0))
    assert all(x == 0 for x in c.values())
    assert curvature_at(plane, SurfacePoint(5, 5)) == 0


def test_sphere_symbols_closed_form(sphere):
    th = 0.7
    c = christoffel_at(sphere, SurfacePoint(th, 1.0))
    assert c["1_22"] == pytest.approx(-math.sin(th) * math.cos(th), abs=1e-14)
    assert c["2_12"] == pytest.approx(1 / math.tan(th), abs=1e-14)
    for key in ("1_11", "1_12", "2_11", "2_22"):
        assert c[key] == pytest.approx(0, abs=1e-14)


def test_user_metric_fd_symbols_match_analytic(sphere):
    user = make_surface(*BUILTINS["user-sphere"])
    for th in (0.4, 1.1, 2.5):
        p = SurfacePoint(th, 0.3)
        a, b = christoffel_at(sphere, p), christoffel_at(user, p)
        for key in a:
            assert b[key] == pytest.approx(a[key], abs=1e-6)
        assert curvature_at(user, p) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_constant_curvature(R):
    s = make_surface("sphere", {"R": R})
    st_ = make_surface("sphere-stereo", {"R": R})
    h = make_surface("hyperbolic-disk", {"a": R})
    for p in (SurfacePoint(0.3, 0.1), SurfacePoint(1.2, -0.4)):
        assert curvature_at(s, SurfacePoint(p.u + 0.5, p.v)) == pytest.approx(1 / R**2, rel=1e-12)
        assert curvature_at(st_, p) == pytest.approx(1 / R**2, rel=1e-9)
    assert curvature_at(h, SurfacePoint(0.2, -0.3)) == pytest.approx(-1 / R**2, rel=1e-9)


def test_ellipsoid_curvature_symbolic_oracle():
    a_, c_ = 1.0, 0.8
    u, v = sp_.symbols("u v")
    a, c = sp_.Rational(1), sp_.Rational(4, 5)
    X = sp_.Matrix([a * sp_.sin(u) * sp_.cos(v), a * sp_.sin(u) * sp_.sin(v), c * sp_.cos(u)])
    Xu, Xv = X.diff(u), X.diff(v)
    E, F, G = sp_.simplify(Xu.dot(Xu)), sp_.simplify(Xu.dot(Xv)), sp_.simplify(Xv.dot(Xv))
    assert F == 0
    W = sp_.sqrt(E * G)
    Ksym = -(sp_.diff(sp_.diff(G, u) / W, u) + sp_.diff(sp_.diff(E, v) / W, v)) / (2 * W)
    Kf = sp_.lambdify((u, v), Ksym, "math")
    s = make_surface("ellipsoid", {"a": a_, "c": c_})
    for th in (0.3, 0.9, math.pi / 2, 2.2):
        assert curvature_at(s, SurfacePoint(th, 0.4)) == pytest.approx(Kf(th, 0.4), rel=1e-9)
    # equator value stays under the declared bound
    k_eq = curvature_at(s, SurfacePoint(math.pi / 2, 0.0))
    assert k_eq == pytest.approx(1 / c_**2, rel=1e-12)
    assert k_eq <= s.curvature_upper_bound + 1e-9


def test_declared_bound_is_honest(surface):
    if surface.curvature_upper_bound is None:
        pytest.skip("no bound declared")
    (u0, u1), (v0, v1) = chart_box(surface)
    uu, vv = np.meshgrid(np.linspace(u0, u1, 60), np.linspace(v0, v1, 60))
    ks = surface.curvature_array(uu.ravel(), vv.ravel())
    assert np.nanmax(ks) <= surface.curvature_upper_bound + 1e-9


def test_understated_bound_rejected():
    with pytest.raises(SurfaceError):
        make_surface("sphere", {"R": 1.0}, curvature_upper_bound=0.5)


def test_degenerate_metric_rejected():
    with pytest.raises(SurfaceError):
        make_surface("user", {"g11": "1", "g12": "1", "g22": "1", "domain": {"u": [0, 1], "v": [0, 1]}})


def test_unknown_kind():
    with pytest.raises(SurfaceError):
        make_surface("torus")


def test_outside_domain(sphere):
    with pytest.raises(DomainError):
        metric_at(sphere, SurfacePoint(0.0, 0.0))
    with pytest.raises(DomainError):
        curvature_at(make_surface("hyperbolic-disk"), SurfacePoint(1.0, 0.1))


def test_angle_examples(plane, sphere):
    p = SurfacePoint(0.0, 0.0)
    assert angle_between_vectors(plane, TangentVector(p, 1, 0), TangentVector(p, 0, 1)) == pytest.approx(math.pi / 2)
    v = TangentVector(p, 0.3, -0.7)
    assert angle_between_vectors(plane, v, v) == 0.0
    q = SurfacePoint(math.pi / 2, 0.0)
    assert angle_between_vectors(sphere, TangentVector(q, 1, 0), TangentVector(q, 0, 1)) == pytest.approx(math.pi / 2)


def test_angle_errors(plane):
    p = SurfacePoint(0.0, 0.0)
    with pytest.raises(ValueError):
        angle_between_vectors(plane, TangentVector(p, 0, 0), TangentVector(p, 1, 0))
    with pytest.raises(ValueError):
        angle_between_vectors(plane, TangentVector(p, 1, 0), TangentVector(SurfacePoint(1, 0), 1, 0))


comp = st.floats(-10, 10).filter(lambda x: abs(x) > 1e-3)
scale = st.floats(1e-3, 1e3)


@settings(max_examples=200, deadline=None)
@given(comp, comp, comp, comp, scale, scale)
def test_angle_symmetric_and_scale_invariant(a1, a2, b1, b2, ca, cb):
    s = make_surface("ellipsoid", {"a": 1.0, "c": 0.8})
    p = SurfacePoint(1.1, 0.5)
    a, b = TangentVector(p, a1, a2), TangentVector(p, b1, b2)
    ang = angle_between_vectors(s, a, b)
    assert 0.0 <= ang <= math.pi
    assert angle_between_vectors(s, b, a) == pytest.approx(ang, abs=1e-12)
    assert angle_between_vectors(s, a.scaled(ca), b.scaled(cb)) == pytest.approx(ang, abs=1e-12)
