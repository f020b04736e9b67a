"""Balanced vertices of geodesic triangles: sweep, descent and verification.

A point Y is balanced when the unit tangents at Y toward A, B and C sum to
zero, equivalently when the three angles AYB, BYC, CYA all measure 2 pi / 3.
It is a stationary point of F(Y) = d(A, Y) + d(B, Y) + d(C, Y).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from geonet.geodesics import GeodesicError, connect, exp_point, log_map
from geonet.surfaces import DomainError, SurfacePoint, TangentVector
from geonet.triangle import TWO_THIRDS_PI, PreconditionReport, Triangle, TriangleError, check_preconditions

log = logging.getLogger(__name__)

VERTEX_TAGS = ("A", "B", "C")
# endpoint tolerance of the internal log maps; angles inherit it divided by the distance
STAR_TOL = 1e-11


class SolverError(RuntimeError):
    """Base class for balanced-vertex solver failures."""


class PreconditionError(SolverError):
    def __init__(self, report: PreconditionReport):
        self.report = report
        super().__init__(f"triangle fails the existence hypotheses (verdict {report.verdict}); "
                         "pass override to attempt anyway")


class BracketError(SolverError):
    """No sign change where the construction guarantees one."""

    def __init__(self, message: str, profile=None):
        self.profile = profile
        super().__init__(message)


@dataclass(frozen=True)
class SolverConfig:
    angle_tol: float = 1e-7
    vec_tol: float = 2e-7
    bvp_tol: float = 1e-9
    max_iter: int = 200
    march_steps: int = 64
    sweep_grid: int = 11
    sweep_grid_refined: int = 41
    override: bool = False
    diameter_samples: int = 24


@dataclass
class BalancedResult:
    point: SurfacePoint
    angles: tuple[float, float, float]
    tangent_sum_norm: float
    method: str
    iterations: int
    converged: bool
    inside_triangle: bool
    objective: float = math.nan
    advisory: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def angle_residuals(self) -> tuple[float, float, float]:
        return tuple(abs(a - TWO_THIRDS_PI) for a in self.angles)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["point"] = [self.point.u, self.point.v]
        d["angles"] = list(self.angles)
        return d


@dataclass(frozen=True)
class BalanceReport:
    """Both residual families of the balancing condition at a point."""

    point: SurfacePoint
    angles: tuple[float, float, float]
    angle_residuals: tuple[float, float, float]
    tangent_sum_norm: float
    angle_sum: float
    angles_pass: bool
    vector_pass: bool
    distances: tuple[float, float, float]

    @property
    def equivalent(self) -> bool:
        return self.angles_pass == self.vector_pass

    @property
    def balanced(self) -> bool:
        return self.angles_pass and self.vector_pass

    def to_dict(self) -> dict:
        return {
            "point": [self.point.u, self.point.v],
            "angles": list(self.angles),
            "angle_residuals": list(self.angle_residuals),
            "tangent_sum_norm": self.tangent_sum_norm,
            "angle_sum": self.angle_sum,
            "angles_pass": self.angles_pass,
            "vector_pass": self.vector_pass,
            "equivalent": self.equivalent,
        }


def _pair_angle(a1: float, a2: float) -> float:
    # frame angles are taken in an orthonormal frame, so their difference is the metric angle
    return abs(math.remainder(a1 - a2, 2 * math.pi))


class _Star:
    """Warm-started log maps from a moving point to the three vertices."""

    def __init__(self, t: Triangle, tol: float):
        self.t = t
        self.tol = tol
        self.guess: list[tuple[float, float] | None] = [None, None, None]

    def seed_from(self, other: "_Star"):
        self.guess = list(other.guess)

    def logs(self, Y: SurfacePoint, which=(0, 1, 2)):
        s = self.t.surface
        out = {}
        for i in which:
            P = self.t.vertices[i]
            if P == Y:
                raise SolverError(f"point coincides with vertex {VERTEX_TAGS[i]}")
            r = log_map(s, Y, P, guess=self.guess[i], tol=self.tol)
            self.guess[i] = r.guess
            out[i] = r
        return out


def _angles_from_alphas(al):
    return (_pair_angle(al[0], al[1]), _pair_angle(al[1], al[2]), _pair_angle(al[2], al[0]))


def _frame_sum(al) -> np.ndarray:
    return np.array([sum(math.cos(a) for a in al), sum(math.sin(a) for a in al)])


def _require_ready(t: Triangle, cfg: SolverConfig, report: PreconditionReport | None) -> tuple[PreconditionReport, bool]:
    if report is None:
        report = check_preconditions(t, cfg.diameter_samples)
    if report.verdict == "fail" and not cfg.override:
        raise PreconditionError(report)
    return report, report.verdict != "pass"


# ---------------------------------------------------------------------------
# the sweep construction


@dataclass
class _Ray:
    """Geodesic from A toward a point X of side BC."""

    x_param: float
    X: SurfacePoint
    alpha: float
    length: float


def _side_bc_point(t: Triangle, x_param: float) -> SurfacePoint:
    bc = t.sides[1]
    return bc.point_at(x_param * bc.total_length)


class _Sweep:
    def __init__(self, t: Triangle, cfg: SolverConfig):
        if t.degenerate:
            raise TriangleError("degenerate triangles are excluded from the sweep construction")
        self.t = t
        self.cfg = cfg
        s = t.surface
        self.to_b = log_map(s, t.A, t.B, guess=(t.sides[0].alpha, t.sides[0].total_length))
        self.to_c = log_map(s, t.A, t.C)
        self.ray_guess: tuple[float, float] | None = None

    def ray(self, x_param: float) -> _Ray:
        if not 0.0 < x_param < 1.0:
            raise ValueError("x_param must lie strictly between 0 and 1")
        X = _side_bc_point(self.t, x_param)
        if self.ray_guess is None:
            da = math.remainder(self.to_c.alpha - self.to_b.alpha, 2 * math.pi)
            guess = (self.to_b.alpha + x_param * da,
                     (1 - x_param) * self.to_b.length + x_param * self.to_c.length)
        else:
            guess = self.ray_guess
        r = log_map(self.t.surface, self.t.A, X, guess=guess, tol=min(self.cfg.bvp_tol, STAR_TOL))
        self.ray_guess = r.guess
        return _Ray(x_param, X, r.alpha, r.length)

    def point_on(self, ray: _Ray, s_arc: float):
        s = self.t.surface
        return exp_point(s, self.t.A, s.frame_direction(self.t.A, ray.alpha), s_arc)

    def star_at_a(self) -> _Star:
        st = _Star(self.t, min(self.cfg.bvp_tol, STAR_TOL))
        st.guess = [None, self.to_b.guess, self.to_c.guess]
        return st


def _angle_bc(sw: _Sweep, ray: _Ray, star: _Star, s_arc: float) -> tuple[float, SurfacePoint, dict]:
    Y, _ = sw.point_on(ray, s_arc)
    logs = star.logs(Y, (1, 2))
    return _pair_angle(logs[1].alpha, logs[2].alpha), Y, logs


@dataclass
class YX:
    """The point Y_X on the ray from A to X where angle BYC first reaches 2 pi / 3."""

    x_param: float
    point: SurfacePoint
    s_arc: float
    ray_length: float
    angle_bc: float
    alphas: tuple[float, float, float]
    tangential: bool = False

    @property
    def angles(self) -> tuple[float, float, float]:
        return _angles_from_alphas(self.alphas)


def _locate(sw: _Sweep, x_param: float) -> YX:
    cfg = sw.cfg
    s = sw.t.surface
    ray = sw.ray(x_param)
    L = ray.length
    target = TWO_THIRDS_PI
    star = sw.star_at_a()
    n = cfg.march_steps
    grid = [L * k / n for k in range(1, n)] + [L * (1 - 1e-6), L * (1 - 1e-9)]
    ss, gs, stars = [0.0], [sw.t.angles[0] - target], [None]
    found = None
    for s_arc in grid:
        val, _, _ = _angle_bc(sw, ray, star, s_arc)
        snap = _Star(sw.t, min(cfg.bvp_tol, STAR_TOL))
        snap.seed_from(star)
        ss.append(s_arc)
        gs.append(val - target)
        stars.append(snap)
        if gs[-1] >= 0.0:
            found = len(ss) - 1
            break
    if found is None:
        raise BracketError(f"angle BYC never reaches 2pi/3 along the ray to x = {x_param:.6g}",
                           profile=list(zip(ss, gs)))

    # a local maximum just below the target before the first crossing counts as a touch
    a, b, seed = ss[found - 1], ss[found], stars[found]
    for k in range(1, found - 1):
        if gs[k] > -1e-3 and gs[k] >= gs[k - 1] and gs[k] >= gs[k + 1]:
            work = _Star(sw.t, min(cfg.bvp_tol, STAR_TOL))
            work.seed_from(stars[k])
            res = minimize_scalar(lambda x: -_angle_bc(sw, ray, work, x)[0], bounds=(ss[k - 1], ss[k + 1]),
                                  method="bounded", options={"xatol": 1e-12 * L})
            peak = -res.fun - target
            if peak >= 0.0:
                a, b, seed = ss[k - 1], float(res.x), stars[k]
                break
            if peak >= -cfg.angle_tol:
                return _finish_yx(sw, ray, float(res.x), x_param, True, stars[k])
    work = _Star(sw.t, min(cfg.bvp_tol, STAR_TOL))
    work.seed_from(seed)
    root = brentq(lambda x: _angle_bc(sw, ray, work, x)[0] - target, a, b, xtol=1e-13 * max(L, 1e-300),
                  rtol=4 * np.finfo(float).eps, maxiter=cfg.max_iter)
    return _finish_yx(sw, ray, root, x_param, False, work)


def _finish_yx(sw: _Sweep, ray: _Ray, s_arc: float, x_param: float, tangential: bool, star: _Star) -> YX:
    s = sw.t.surface
    Y, vel = sw.point_on(ray, s_arc)
    logs = star.logs(Y, (1, 2))
    alpha_a = s.frame_angle(TangentVector(Y, -vel.du, -vel.dv))
    alphas = (alpha_a, logs[1].alpha, logs[2].alpha)
    if tangential:
        log.warning("angle BYC touches 2pi/3 without crossing at x = %.6g", x_param)
    return YX(x_param, Y, s_arc, ray.length, _pair_angle(alphas[1], alphas[2]), alphas, tangential)


def locate_y_x(t: Triangle, x_param: float, config: SolverConfig | None = None) -> YX:
    """Y_X with its arc-length position, ray length and vertex directions."""
    cfg = config or SolverConfig()
    return _locate(_Sweep(t, cfg), x_param)


def find_y_x(t: Triangle, x_param: float, config: SolverConfig | None = None) -> SurfacePoint:
    """First point from A along the geodesic A -> X(x_param) with angle BYC = 2 pi / 3.

    X is the point of side BC at fraction ``x_param`` of its length. The ray
    is marched from A and the first crossing is refined with Brent's method.
    """
    return locate_y_x(t, x_param, config).point


@dataclass
class TraceRecord:
    x_param: float
    point: SurfacePoint | None
    angles: tuple[float, float, float] | None
    s_arc: float = math.nan
    tangential: bool = False
    error: str | None = None


@dataclass
class SweepTrace:
    records: list[TraceRecord]

    @property
    def ok(self) -> list[TraceRecord]:
        return [r for r in self.records if r.point is not None]


def trace_s_curve(t: Triangle, n: int, config: SolverConfig | None = None) -> SweepTrace:
    """Y_X at x_param = k / (n + 1), k = 1..n."""
    if n < 2:
        raise ValueError("trace needs n >= 2 records")
    cfg = config or SolverConfig()
    sw = _Sweep(t, cfg)
    records = []
    for k in range(1, n + 1):
        x = k / (n + 1)
        try:
            y = _locate(sw, x)
            records.append(TraceRecord(x, y.point, y.angles, y.s_arc, y.tangential))
        except (SolverError, GeodesicError, DomainError, ValueError) as exc:
            records.append(TraceRecord(x, None, None, error=str(exc)))
    trace = SweepTrace(records)
    if len(trace.ok) < 2:
        raise SolverError(f"trace failed: only {len(trace.ok)} of {n} records succeeded")
    return trace


@dataclass
class AngleProfile:
    x_param: float
    fractions: np.ndarray
    points: list[SurfacePoint]
    angles: np.ndarray

    @property
    def increasing(self) -> bool:
        return bool(np.all(np.diff(self.angles) > 0))


def angle_profile(t: Triangle, x_param: float, n: int, config: SolverConfig | None = None) -> AngleProfile:
    """Angle BYC at equal arc-length fractions of the geodesic A -> X, ends included."""
    if n < 3:
        raise ValueError("angle profile needs n >= 3 samples")
    cfg = config or SolverConfig()
    sw = _Sweep(t, cfg)
    ray = sw.ray(x_param)
    star = sw.star_at_a()
    fr = np.linspace(0.0, 1.0, n)
    pts, vals = [t.A], [t.angles[0]]
    for f in fr[1:]:
        val, Y, _ = _angle_bc(sw, ray, star, f * ray.length)
        pts.append(Y)
        vals.append(val)
    return AngleProfile(x_param, fr, pts, np.array(vals))


def sweep_balanced(t: Triangle, config: SolverConfig | None = None, *,
                   report: PreconditionReport | None = None) -> BalancedResult:
    """Balanced point from the sign change of angle A Y_X B - 2 pi / 3 over x_param."""
    cfg = config or SolverConfig()
    report, advisory = _require_ready(t, cfg, report)
    sw = _Sweep(t, cfg)
    history = []

    def h(x):
        y = _locate(sw, x)
        val = _pair_angle(y.alphas[0], y.alphas[1]) - TWO_THIRDS_PI
        history.append((x, val))
        return val, y

    bracket = None
    for n in (cfg.sweep_grid, cfg.sweep_grid_refined):
        xs = [k / (n + 1) for k in range(1, n + 1)]
        prev = None
        for x in xs:
            try:
                val, y = h(x)
            except (SolverError, GeodesicError, DomainError) as exc:
                log.debug("sweep sample at x = %.4g failed: %s", x, exc)
                prev = None
                continue
            if val == 0.0:
                bracket = (x, x, y)
                break
            if prev is not None and prev[1] > 0 > val:
                bracket = (prev[0], x, None)
                break
            prev = (x, val)
        if bracket is not None:
            break
    if bracket is None:
        bracket = _end_bracket(h, history)
    if bracket is None:
        raise BracketError("angle AY_XB - 2pi/3 has no sign change over the sweep grid",
                           profile=sorted(history))

    lo, hi, y = bracket
    iterations = 0
    if y is None:
        def f(x):
            return h(x)[0]
        x_star, info = brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps,
                              maxiter=cfg.max_iter, full_output=True)
        iterations = info.iterations
        y = _locate(sw, x_star)
    res = _result_at(t, y.point, y.alphas, "sweep", iterations, cfg, advisory)
    res.diagnostics.update({"x_param": y.x_param, "s_arc": y.s_arc, "tangential": y.tangential,
                            "bracket": [lo, hi], "history": sorted(history)})
    return res


def _end_bracket(h, history, halvings: int = 40):
    """Geometric refinement toward x = 0 or x = 1 when the whole grid has one sign.

    When an angle of the triangle is close to 2 pi / 3 the balanced point sits
    next to that vertex and the sign change is squeezed against an end of the
    x_param range.
    """
    vals = sorted(history)
    if not vals:
        return None
    if all(v < 0 for _, v in vals):
        x_in, toward = vals[0][0], 0.0
    elif all(v > 0 for _, v in vals):
        x_in, toward = vals[-1][0], 1.0
    else:
        return None
    for _ in range(halvings):
        x_out = toward + 0.5 * (x_in - toward)
        try:
            val, y = h(x_out)
        except (SolverError, GeodesicError, DomainError):
            return None
        if val == 0.0:
            return (x_out, x_out, y)
        if (val > 0) == (toward == 0.0):
            return (x_out, x_in, None) if toward == 0.0 else (x_in, x_out, None)
        x_in = x_out
    return None


def _result_at(t: Triangle, Y: SurfacePoint, alphas, method: str, iterations: int,
               cfg: SolverConfig, advisory: bool, distances=None) -> BalancedResult:
    angles = _angles_from_alphas(alphas)
    snorm = float(np.linalg.norm(_frame_sum(alphas)))
    converged = max(abs(a - TWO_THIRDS_PI) for a in angles) <= cfg.angle_tol and snorm <= cfg.vec_tol
    inside = t.contains(Y) if t.closed else False
    F = float(sum(distances)) if distances is not None else math.nan
    return BalancedResult(Y, angles, snorm, method, iterations, bool(converged), inside, F, advisory)


# ---------------------------------------------------------------------------
# objective, gradient and descent


@dataclass(frozen=True)
class StarEval:
    point: SurfacePoint
    alphas: tuple[float, float, float]
    distances: tuple[float, float, float]

    @property
    def objective(self) -> float:
        return float(sum(self.distances))


def _eval(t: Triangle, star: _Star, Y: SurfacePoint) -> StarEval:
    logs = star.logs(Y)
    return StarEval(Y, tuple(logs[i].alpha for i in range(3)), tuple(logs[i].length for i in range(3)))


def tangent_sum(t: Triangle, Y: SurfacePoint, *, tol: float = 1e-12) -> TangentVector:
    """Sum of the unit tangents at Y toward A, B and C (chart components)."""
    ev = _eval(t, _Star(t, tol), Y)
    sx, sy = _frame_sum(ev.alphas)
    e1 = t.surface.frame_direction(Y, 0.0)
    e2 = t.surface.frame_direction(Y, math.pi / 2)
    return TangentVector(Y, sx * e1.du + sy * e2.du, sx * e1.dv + sy * e2.dv)


def objective(t: Triangle, Y: SurfacePoint, *, tol: float = 1e-12) -> float:
    """F(Y) = d(A, Y) + d(B, Y) + d(C, Y) along the shooting geodesics."""
    return _eval(t, _Star(t, tol), Y).objective


def objective_gradient(t: Triangle, Y: SurfacePoint, *, tol: float = 1e-12) -> np.ndarray:
    """Chart gradient dF = -g(S, .) with S the unit-tangent sum."""
    return -t.surface.lower(tangent_sum(t, Y, tol=tol))


def fd_gradient(t: Triangle, Y: SurfacePoint, h: float = 1e-5, *, tol: float = 1e-12) -> np.ndarray:
    """Central-difference chart gradient of F."""
    star = _Star(t, tol)
    out = np.zeros(2)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fp = _eval(t, star, SurfacePoint(Y.u + e[0], Y.v + e[1])).objective
        fm = _eval(t, star, SurfacePoint(Y.u - e[0], Y.v - e[1])).objective
        out[k] = (fp - fm) / (2 * h)
    return out


def default_start(t: Triangle) -> SurfacePoint:
    """Chart average of the vertices, or the boundary centroid when that is not interior."""
    s = t.surface
    lifted = np.array([t.lift(p) for p in t.vertices]) if t.closed else np.array([[p.u, p.v] for p in t.vertices])
    avg = lifted.mean(axis=0)
    cand = SurfacePoint(float(avg[0]), float(avg[1]))
    if t.degenerate or not (s.contains(cand) and t.contains(cand)):
        cand = boundary_centroid(t)
    return cand


def boundary_centroid(t: Triangle) -> SurfacePoint:
    """Area centroid of the chart region enclosed by the boundary polygon."""
    x, y = t.boundary[:, 0], t.boundary[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cr = x * y1 - x1 * y
    a = cr.sum() / 2
    cx = ((x + x1) * cr).sum() / (6 * a)
    cy = ((y + y1) * cr).sum() / (6 * a)
    return SurfacePoint(float(cx), float(cy))


def _grad_frame(ev: StarEval) -> np.ndarray:
    # gradient of F in the orthonormal frame at the point is minus the unit-tangent sum
    return -_frame_sum(ev.alphas)


def _frame_to_chart(s, Y: SurfacePoint, w: np.ndarray) -> np.ndarray:
    e1 = s.frame_direction(Y, 0.0)
    e2 = s.frame_direction(Y, math.pi / 2)
    return np.array([w[0] * e1.du + w[1] * e2.du, w[0] * e1.dv + w[1] * e2.dv])


def _vertex_minimum(t: Triangle) -> int | None:
    """Index of the vertex where F is minimal, when its angle is at least 2 pi / 3."""
    if t.degenerate:
        return None
    for i, a in enumerate(t.angles):
        if a >= TWO_THIRDS_PI:
            return i
    return None


def descent_balanced(t: Triangle, start: SurfacePoint | None = None, config: SolverConfig | None = None, *,
                     report: PreconditionReport | None = None, sweep_seed: SurfacePoint | None = None
                     ) -> BalancedResult:
    """Stationary point of F by damped Newton steps with a Weiszfeld fallback.

    Steps are accepted only when F does not increase and the iterate stays in
    the triangle. If the iteration is pushed out of the triangle it restarts
    once from ``sweep_seed`` (computed from the sweep at x = 1/2 when not
    given and the triangle admits the sweep).
    """
    cfg = config or SolverConfig()
    report, advisory = _require_ready(t, cfg, report)
    Y0 = start if start is not None else default_start(t)
    t.surface.require(Y0)

    res = _descend(t, Y0, cfg, advisory)
    if res.diagnostics.get("exited") and not res.converged:
        seed = sweep_seed
        if seed is None and not t.degenerate:
            try:
                seed = find_y_x(t, 0.5, cfg)
            except (SolverError, GeodesicError, DomainError):
                seed = None
        if seed is not None:
            log.info("descent left the triangle; restarting from the sweep seed")
            res2 = _descend(t, seed, cfg, advisory)
            res2.diagnostics["restarted"] = True
            res2.iterations += res.iterations
            return res2
    return res


def _descend(t: Triangle, Y: SurfacePoint, cfg: SolverConfig, advisory: bool) -> BalancedResult:
    s = t.surface
    star = _Star(t, min(cfg.bvp_tol, STAR_TOL))
    ev = _eval(t, star, Y)
    history = [ev.objective]
    exited = False
    it = 0

    def done(ev):
        r = _result_at(t, ev.point, ev.alphas, "descent", it, cfg, advisory, ev.distances)
        return r if r.converged else None

    stationary = done(ev)
    if stationary is None:
        vmin = _vertex_minimum(t)
        if vmin is not None:
            P = t.vertices[vmin]
            others = [d for j, d in enumerate(t.side_lengths) if j != (vmin + 1) % 3]
            return BalancedResult(P, (math.nan,) * 3, math.nan, "descent", 0, False, False, float(sum(others)),
                                  advisory, {"vertex_minimum": VERTEX_TAGS[vmin],
                                             "reason": "an interior angle is at least 2pi/3; F is least at that vertex"})

    while stationary is None and it < cfg.max_iter:
        it += 1
        g = _grad_frame(ev)
        step = _newton_step(t, star, ev, g)
        if step is None or float(g @ step) >= 0:
            # Weiszfeld step: the unit-tangent sum scaled by the harmonic weight
            step = -g / sum(1.0 / d for d in ev.distances)
        else:
            # F is smooth only on the scale of the distance to the nearest vertex
            cap = 0.5 * min(ev.distances)
            norm = float(np.linalg.norm(step))
            if norm > cap:
                step = step * (cap / norm)
        accepted = False
        for _ in range(40):
            dY = _frame_to_chart(s, ev.point, step)
            cand = SurfacePoint(ev.point.u + float(dY[0]), ev.point.v + float(dY[1]))
            if not s.contains(cand) or (t.closed and not t.contains(cand)):
                exited = True
                step = 0.5 * step
                continue
            try:
                trial_star = _Star(t, star.tol)
                trial_star.seed_from(star)
                ev_new = _eval(t, trial_star, cand)
            except (GeodesicError, SolverError):
                step = 0.5 * step
                continue
            if _accept(ev, ev_new):
                star = trial_star
                ev = ev_new
                accepted = True
                break
            step = 0.5 * step
        if not accepted:
            break
        history.append(ev.objective)
        stationary = done(ev)

    res = stationary or _result_at(t, ev.point, ev.alphas, "descent", it, cfg, advisory, ev.distances)
    res.iterations = it
    res.diagnostics.update({"objective_history": history, "exited": exited and not res.converged,
                            "start": [Y.u, Y.v]})
    return res


# relative size of the evaluation noise in F (log-map endpoint tolerance times a few)
F_NOISE = 1e-10


def _accept(old: StarEval, new: StarEval) -> bool:
    """F must not increase; inside the evaluation noise the tangent sum must shrink instead."""
    noise = F_NOISE * max(1.0, old.objective)
    if new.objective < old.objective - noise:
        return True
    if new.objective > old.objective + noise:
        return False
    return np.linalg.norm(_frame_sum(new.alphas)) < np.linalg.norm(_frame_sum(old.alphas))


def _newton_step(t: Triangle, star: _Star, ev: StarEval, g: np.ndarray, h: float = 1e-5):
    """Newton step in the orthonormal frame from a central-difference Hessian."""
    s = t.surface
    Y = ev.point
    H = np.zeros((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        d = _frame_to_chart(s, Y, e)
        try:
            gp_ev = _eval(t, star, SurfacePoint(Y.u + d[0], Y.v + d[1]))
            gm_ev = _eval(t, star, SurfacePoint(Y.u - d[0], Y.v - d[1]))
        except (GeodesicError, SolverError, DomainError):
            return None
        # the frame rotation between probe points multiplies g, which vanishes at the solution
        H[:, k] = (_grad_frame(gp_ev) - _grad_frame(gm_ev)) / (2 * h)
    H = 0.5 * (H + H.T)
    try:
        w = np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError:
        return None
    if w[0] <= 1e-12 * max(1.0, abs(w[1])):
        return None
    return -np.linalg.solve(H, g)


# ---------------------------------------------------------------------------
# verification


def verify_balanced(t: Triangle, Y: SurfacePoint, config: SolverConfig | None = None) -> BalanceReport:
    """Angle residuals and unit-tangent sum at Y, from uniquely solved geodesics."""
    cfg = config or SolverConfig()
    s = t.surface
    s.require(Y)
    alphas, dists = [], []
    for P in t.vertices:
        if P == Y:
            raise SolverError("the point coincides with a vertex")
        g = connect(s, Y, P, tol=min(cfg.bvp_tol, STAR_TOL))
        alphas.append(g.alpha)
        dists.append(g.total_length)
    angles = _angles_from_alphas(alphas)
    resid = tuple(abs(a - TWO_THIRDS_PI) for a in angles)
    snorm = float(np.linalg.norm(_frame_sum(alphas)))
    return BalanceReport(Y, angles, resid, snorm, float(sum(angles)), max(resid) <= cfg.angle_tol,
                         snorm <= cfg.vec_tol, tuple(dists))
