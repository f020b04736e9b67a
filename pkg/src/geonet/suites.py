"""Built-in verification suites driven by ``geonet verify``.

Every randomized battery draws from ``numpy.random.Philox`` keyed by the
run seed and a fixed per-suite stream id, so results are reproducible.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from geonet.geodesics import GeodesicError, NonUniqueGeodesicError, connect, exp_point, shoot
from geonet.jacobi import (
    comparison_gap,
    first_conjugate_point,
    index_form,
    monotone_window_check,
    norm_sq_prime,
    solve_jacobi,
)
from geonet.scenario import ScenarioError, load_scenario, parse_point
from geonet.solver import (
    SolverConfig,
    SolverError,
    descent_balanced,
    fd_gradient,
    objective_gradient,
    sweep_balanced,
)
from geonet.surfaces import DomainError, Surface, SurfacePoint, TangentVector, make_surface
from geonet.triangle import (
    TWO_THIRDS_PI,
    build_triangle,
    check_preconditions,
    gauss_bonnet_residual,
)

log = logging.getLogger(__name__)

STREAMS = {
    "gauss-bonnet": 1,
    "jacobi-sphere": 2,
    "jacobi-comparison": 3,
    "index-lemma": 4,
    "existence-nonpositive": 5,
    "existence-sphere": 6,
    "existence-ellipsoid": 7,
    "gradient": 8,
    "plane-fermat": 9,
    "examples": 10,
}

# ellipsoid used by the curvature-comparison batteries: K <= 1/c^2 with equality on the equator
ELLIPSOID = {"a": 1.0, "c": 0.8}


def rng_for(seed: int, suite: str) -> np.random.Generator:
    """Counter-based generator for one suite; independent of call order."""
    return np.random.Generator(np.random.Philox(key=[int(seed), STREAMS.get(suite, 0)]))


@dataclass
class Case:
    name: str
    ok: bool
    value: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "value": self.value, "detail": self.detail}


@dataclass
class SuiteResult:
    name: str
    cases: list[Case] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(c.ok for c in self.cases)

    @property
    def total(self) -> int:
        return len(self.cases)

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.passed == self.total

    def add(self, name, ok, value=None, detail=""):
        self.cases.append(Case(name, bool(ok), None if value is None else float(value), detail))

    def to_dict(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "total": self.total, "ok": self.ok,
                "cases": [c.to_dict() for c in self.cases]}


# ---------------------------------------------------------------------------
# random triangles


def _min_angle_ok(t, lo=0.05):
    return min(t.angles) > lo and max(t.angles) < TWO_THIRDS_PI - 1e-3


def random_chart_triangle(s: Surface, rng: np.random.Generator, centre, radius: float,
                          min_angle: float = 0.05, tries: int = 200):
    """Triangle with chart vertices uniform in a disk and all angles in (min_angle, 2pi/3)."""
    for _ in range(tries):
        r = radius * np.sqrt(rng.random(3))
        th = 2 * np.pi * rng.random(3)
        pts = [SurfacePoint(float(centre[0] + r[i] * np.cos(th[i])), float(centre[1] + r[i] * np.sin(th[i])))
               for i in range(3)]
        try:
            t = build_triangle(s, *pts)
        except (GeodesicError, ValueError):
            continue
        if not t.degenerate and _min_angle_ok(t, min_angle):
            return t
    raise RuntimeError("could not draw an admissible random triangle")


def random_geodesic_triangle(s: Surface, rng: np.random.Generator, u_range, radius: float,
                             min_angle: float = 0.05, tries: int = 200):
    """Vertices at geodesic distance < ``radius`` from a random centre (polar-type charts)."""
    for _ in range(tries):
        c = SurfacePoint(float(rng.uniform(*u_range)), float(rng.uniform(0, 2 * np.pi)))
        pts = []
        for _ in range(3):
            alpha = float(rng.uniform(0, 2 * np.pi))
            dist = float(radius * np.sqrt(rng.uniform(0.05, 1.0)))
            q, _ = exp_point(s, c, s.frame_direction(c, alpha), dist)
            pts.append(SurfacePoint(q.u, float(np.mod(q.v, 2 * np.pi))))
        try:
            t = build_triangle(s, *pts)
        except (GeodesicError, ValueError):
            continue
        if not t.degenerate and _min_angle_ok(t, min_angle):
            return t
    raise RuntimeError("could not draw an admissible random triangle")


def interior_point(t, rng: np.random.Generator) -> SurfacePoint:
    """Random interior point on the geodesic fan from A (fractions kept off the boundary)."""
    s = t.surface
    bc = t.sides[1]
    x = float(rng.uniform(0.1, 0.9))
    X = bc.point_at(x * bc.total_length)
    g = connect(s, t.A, X)
    return g.point_at(float(rng.uniform(0.15, 0.85)) * g.total_length)


def weiszfeld(points: np.ndarray, tol: float = 1e-15, max_iter: int = 100000) -> np.ndarray:
    """Euclidean geometric median by Weiszfeld iteration."""
    y = points.mean(axis=0)
    for _ in range(max_iter):
        d = np.linalg.norm(points - y, axis=1)
        if np.any(d < 1e-300):
            return y
        y_new = (points / d[:, None]).sum(axis=0) / (1.0 / d).sum()
        if np.linalg.norm(y_new - y) <= tol:
            return y_new
        y = y_new
    return y


# ---------------------------------------------------------------------------
# suites


def suite_gauss_bonnet(seed: int) -> SuiteResult:
    res = SuiteResult("gauss-bonnet")
    rng = rng_for(seed, "gauss-bonnet")
    st = make_surface("sphere-stereo", {"R": 1.0})
    oct_ = build_triangle(st, SurfacePoint(1, 0), SurfacePoint(0, 1), SurfacePoint(0, 0))
    r = gauss_bonnet_residual(oct_, 256)
    res.add("sphere-octant@256", r <= 1e-4, r)
    plane = make_surface("plane")
    for k in range(5):
        t = random_chart_triangle(plane, rng, (0.0, 0.0), 1.0)
        r = gauss_bonnet_residual(t, 32)
        res.add(f"plane-{k}", r <= 1e-10, r)
    ell = make_surface("ellipsoid", ELLIPSOID)
    for k in range(3):
        t = random_geodesic_triangle(ell, rng, (0.6, math.pi - 0.6), 0.5)
        r = gauss_bonnet_residual(t, 512)
        res.add(f"ellipsoid-{k}@512", r <= 1e-3, r)
    hyp = make_surface("hyperbolic-disk")
    for k in range(3):
        t = random_chart_triangle(hyp, rng, (0.0, 0.0), 0.6)
        r = gauss_bonnet_residual(t, 256)
        res.add(f"hyperbolic-{k}@256", r <= 1e-4, r)
    return res


def suite_jacobi_sphere(seed: int) -> SuiteResult:
    res = SuiteResult("jacobi-sphere")
    rng = rng_for(seed, "jacobi-sphere")
    sp = make_surface("sphere", {"R": 1.0})
    for k in range(5):
        p = SurfacePoint(float(rng.uniform(1.2, 1.9)), float(rng.uniform(0, 2 * np.pi)))
        # headings close to east-west keep the length-3 arc away from the chart poles
        alpha = float(rng.uniform(-0.3, 0.3)) + math.pi / 2 * (1 + 2 * (k % 2))
        g = shoot(sp, p, sp.frame_direction(p, alpha), 3.0)
        J = solve_jacobi(sp, g, 0.0, 1.0)
        err = float(np.max(np.abs(J.j - np.sin(J.t))))
        res.add(f"sin-match-{k}", err <= 1e-7, err)
        if k == 0:
            v = float(norm_sq_prime(J, math.pi / 4))
            res.add("norm-sq-prime(pi/4)", abs(v - 1) <= 1e-6, v)
            res.add("window(1.55)", monotone_window_check(sp, g, 1.55).ok)
            res.add("window(1.60)", not monotone_window_check(sp, g, 1.60).ok)
    p = SurfacePoint(math.pi / 2, 0.0)
    g = shoot(sp, p, TangentVector(p, 0.0, 1.0), 4.0)
    tc = first_conjugate_point(solve_jacobi(sp, g, 0.0, 1.0))
    res.add("conjugate-point", tc is not None and abs(tc - math.pi) <= 1e-6, tc)
    return res


def _ellipsoid_triangles(seed: int, suite: str, n: int):
    ell = make_surface("ellipsoid", ELLIPSOID)
    rng = rng_for(seed, suite)
    out = []
    while len(out) < n:
        t = random_geodesic_triangle(ell, rng, (0.6, math.pi - 0.6), 0.45)
        rep = check_preconditions(t, 12)
        if rep.verdict == "pass":
            out.append((t, rep))
    return ell, out


def suite_jacobi_comparison(seed: int, n: int = 10) -> SuiteResult:
    res = SuiteResult("jacobi-comparison")
    ell, tris = _ellipsoid_triangles(seed, "jacobi-comparison", n)
    R = ell.bound_radius
    for k, (t, _) in enumerate(tris):
        for name, g in zip(("AB", "BC", "CA"), t.sides):
            if g.total_length >= R * math.pi / 2:
                continue
            gap = float(np.min(comparison_gap(ell, g, R)))
            res.add(f"tri{k}-{name}", gap >= -1e-6, gap)
    return res


def pl_comparison_field(rng: np.random.Generator, t0: float, target: float, knots: int = 8,
                        per_knot: int = 128):
    """Piecewise-linear V with V(0) = 0 and V(t0) = target on a Simpson-aligned grid."""
    tk = np.linspace(0.0, t0, knots + 1)
    scale = float(rng.uniform(0.01, 0.5))
    vk = np.sin(tk) * target / math.sin(t0) + scale * rng.standard_normal(knots + 1)
    vk[0], vk[-1] = 0.0, target
    tt = np.linspace(0.0, t0, knots * per_knot + 1)
    v = np.interp(tt, tk, vk)
    seg = np.minimum(np.searchsorted(tk, tt, side="right") - 1, knots - 1)
    slope = np.diff(vk) / np.diff(tk)
    return tt, v, slope[seg]


def suite_index_lemma(seed: int, n: int = 20) -> SuiteResult:
    res = SuiteResult("index-lemma")
    rng = rng_for(seed, "index-lemma")
    sp = make_surface("sphere", {"R": 1.0})
    p = SurfacePoint(math.pi / 2, 0.0)
    t0 = 1.0
    g = shoot(sp, p, TangentVector(p, 0.0, 1.0), t0)
    tt = np.linspace(0.0, t0, 1025)
    IJ = index_form(sp, g, (tt, np.sin(tt), np.cos(tt)), t0)
    res.add("I(J,J)=sin cos", abs(IJ - math.sin(t0) * math.cos(t0)) <= 1e-5, IJ)
    for k in range(n):
        V = pl_comparison_field(rng, t0, math.sin(t0))
        IV = index_form(sp, g, V, t0)
        res.add(f"pl-{k}", IV >= IJ - 1e-6, IV - IJ)
    return res


def _existence(res: SuiteResult, tris, cfg: SolverConfig):
    for k, (t, rep) in enumerate(tris):
        try:
            r = sweep_balanced(t, cfg, report=rep)
            ok, val, detail = r.converged, max(r.angle_residuals), ""
        except (SolverError, GeodesicError, DomainError) as exc:
            ok, val, detail = False, None, str(exc)
        res.add(f"tri{k}", ok, val, detail)


def suite_existence_nonpositive(seed: int, n: int = 50) -> SuiteResult:
    res = SuiteResult("existence-nonpositive")
    rng = rng_for(seed, "existence-nonpositive")
    hyp = make_surface("hyperbolic-disk")
    cfg = SolverConfig()
    tris = []
    for _ in range(n):
        t = random_chart_triangle(hyp, rng, (0.0, 0.0), 0.7)
        tris.append((t, check_preconditions(t)))
    _existence(res, tris, cfg)
    return res


def suite_existence_sphere(seed: int, n: int = 50) -> SuiteResult:
    res = SuiteResult("existence-sphere")
    rng = rng_for(seed, "existence-sphere")
    sp = make_surface("sphere", {"R": 1.0})
    tris = []
    while len(tris) < n:
        t = random_geodesic_triangle(sp, rng, (0.6, math.pi - 0.6), 0.6)
        rep = check_preconditions(t, 12)
        if rep.verdict == "pass":
            tris.append((t, rep))
    _existence(res, tris, SolverConfig(diameter_samples=12))
    return res


def suite_existence_ellipsoid(seed: int, n: int = 50) -> SuiteResult:
    res = SuiteResult("existence-ellipsoid")
    _, tris = _ellipsoid_triangles(seed, "existence-ellipsoid", n)
    _existence(res, tris, SolverConfig(diameter_samples=12))
    return res


def gradient_families():
    return {
        "plane": (make_surface("plane"), "chart", (0.0, 0.0), 1.0),
        "hyperbolic": (make_surface("hyperbolic-disk"), "chart", (0.0, 0.0), 0.6),
        "sphere": (make_surface("sphere", {"R": 1.0}), "geodesic", (0.6, math.pi - 0.6), 0.6),
        "ellipsoid": (make_surface("ellipsoid", ELLIPSOID), "geodesic", (0.6, math.pi - 0.6), 0.45),
    }


def suite_gradient(seed: int, n: int = 20) -> SuiteResult:
    res = SuiteResult("gradient")
    rng = rng_for(seed, "gradient")
    for fam, (s, how, where, radius) in gradient_families().items():
        for k in range(n):
            if how == "chart":
                t = random_chart_triangle(s, rng, where, radius)
            else:
                t = random_geodesic_triangle(s, rng, where, radius)
            Y = interior_point(t, rng)
            an = objective_gradient(t, Y)
            fd = fd_gradient(t, Y, 1e-5)
            rel = float(np.linalg.norm(fd - an) / np.linalg.norm(an))
            res.add(f"{fam}-{k}", rel <= 1e-4, rel)
    return res


def suite_plane_fermat(seed: int, n: int = 100) -> SuiteResult:
    res = SuiteResult("plane-fermat")
    rng = rng_for(seed, "plane-fermat")
    plane = make_surface("plane")
    cfg = SolverConfig()
    for k in range(n):
        t = random_chart_triangle(plane, rng, (0.0, 0.0), 1.0)
        rep = check_preconditions(t)
        oracle = weiszfeld(np.array([[p.u, p.v] for p in t.vertices]))
        errs = []
        for solve in (lambda: sweep_balanced(t, cfg, report=rep), lambda: descent_balanced(t, config=cfg, report=rep)):
            try:
                r = solve()
                errs.append(float(np.hypot(r.point.u - oracle[0], r.point.v - oracle[1])) if r.converged else math.inf)
            except (SolverError, GeodesicError) as exc:
                log.info("plane triangle %d: %s", k, exc)
                errs.append(math.inf)
        res.add(f"tri{k}", max(errs) <= 1e-6, max(errs))
    return res


def suite_examples(seed: int) -> SuiteResult:
    res = SuiteResult("examples")
    sp = make_surface("sphere", {"R": 1.0})
    try:
        connect(sp, SurfacePoint(math.pi / 2, 0.0), SurfacePoint(math.pi / 2, math.pi))
        res.add("antipodal-non-unique", False)
    except NonUniqueGeodesicError:
        res.add("antipodal-non-unique", True)
    st = make_surface("sphere-stereo", {"R": 1.0})
    verts = [SurfacePoint(math.cos(a), math.sin(a)) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)]
    t = build_triangle(st, *verts)
    rep = check_preconditions(t, 16)
    res.add("equator-preconditions-fail", rep.verdict == "fail" and rep.diameter_estimate >= math.pi / 2,
            rep.diameter_estimate)
    r = descent_balanced(t, config=SolverConfig(override=True), report=rep)
    res.add("equator-pole", r.converged and math.hypot(r.point.u, r.point.v) <= 1e-6,
            max(r.angle_residuals))
    return res


SUITES = {
    "gauss-bonnet": suite_gauss_bonnet,
    "jacobi-sphere": suite_jacobi_sphere,
    "jacobi-comparison": suite_jacobi_comparison,
    "index-lemma": suite_index_lemma,
    "existence-nonpositive": suite_existence_nonpositive,
    "existence-sphere": suite_existence_sphere,
    "existence-ellipsoid": suite_existence_ellipsoid,
    "gradient": suite_gradient,
    "plane-fermat": suite_plane_fermat,
    "examples": suite_examples,
}


def suite_scenarios(directory: Path, seed: int | None = None) -> SuiteResult:
    """Run every ``*.json`` scenario in ``directory`` against its ``expect`` block."""
    from geonet.runner import EXIT_INPUT, run_scenario

    res = SuiteResult("scenarios")
    for path in sorted(Path(directory).glob("*.json")):
        try:
            sc = load_scenario(path)
        except ScenarioError as exc:
            res.add(path.name, False, None, str(exc).splitlines()[0])
            continue
        if seed is not None:
            sc = replace(sc, seed=seed)
        record, code = run_scenario(sc)
        exp = sc.expect
        ok = code == exp.get("exit_code", 0)
        detail = f"exit {code}"
        if ok and "verdict" in exp:
            ok = record.get("preconditions", {}).get("verdict") == exp["verdict"]
        if ok and "point" in exp and code != EXIT_INPUT:
            want = parse_point(exp["point"], "expect/point")
            pts = [r["point"] for r in record.get("results", {}).values() if r.get("converged")]
            tol = exp.get("point_tol", 1e-6)
            dev = max((math.hypot(p[0] - want.u, p[1] - want.v) for p in pts), default=math.inf)
            ok = dev <= tol
            detail += f", point deviation {dev:.3g}"
        res.add(sc.name, ok, None, detail)
    return res
