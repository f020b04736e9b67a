"""Two-dimensional Riemannian surfaces given by a metric in a single chart."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from geonet import _kernels as K
from geonet.expr import compile_expression, pack

KINDS = ("plane", "sphere", "sphere-stereo", "hyperbolic-disk", "ellipsoid", "user")

_KIND_IDS = {
    "plane": K.KIND_PLANE,
    "sphere": K.KIND_SPHERE,
    "sphere-stereo": K.KIND_SPHERE_STEREO,
    "hyperbolic-disk": K.KIND_HYPERBOLIC,
    "ellipsoid": K.KIND_SPHEROID,
    "user": K.KIND_USER,
}

# finite window used to probe unbounded chart domains
_PROBE_WINDOW = 10.0


class SurfaceError(ValueError):
    """Invalid surface parameters or a malformed metric."""


class DomainError(ValueError):
    """A point lies outside the chart domain."""


@dataclass(frozen=True)
class SurfacePoint:
    u: float
    v: float

    def __iter__(self):
        yield self.u
        yield self.v

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v])


@dataclass(frozen=True)
class TangentVector:
    base: SurfacePoint
    du: float
    dv: float

    def as_array(self) -> np.ndarray:
        return np.array([self.du, self.dv])

    def scaled(self, c: float) -> "TangentVector":
        return TangentVector(self.base, c * self.du, c * self.dv)


@dataclass(frozen=True)
class ChartDomain:
    """Open rectangle ``(u_min, u_max) x (v_min, v_max)`` or open disk."""

    shape: str
    bounds: tuple[float, ...]
    v_period: float = 0.0

    def as_array(self) -> np.ndarray:
        if self.shape == "rectangle":
            return np.array([0.0, *self.bounds, self.v_period])
        return np.array([1.0, *self.bounds, 0.0, self.v_period])

    def probe_grid(self, n: int = 41) -> tuple[np.ndarray, np.ndarray]:
        """Points strictly inside the domain, on an ``n x n`` lattice."""
        if self.shape == "rectangle":
            lo_u, hi_u, lo_v, hi_v = self.bounds
            if self.v_period > 0:
                lo_v, hi_v = 0.0, self.v_period
            lo_u = max(lo_u, -_PROBE_WINDOW)
            hi_u = min(hi_u, _PROBE_WINDOW)
            lo_v = max(lo_v, -_PROBE_WINDOW)
            hi_v = min(hi_v, _PROBE_WINDOW)
            us = np.linspace(lo_u, hi_u, n + 2)[1:-1]
            vs = np.linspace(lo_v, hi_v, n + 2)[1:-1]
            uu, vv = np.meshgrid(us, vs, indexing="ij")
            return uu.ravel(), vv.ravel()
        cu, cv, r = self.bounds
        r = min(r, _PROBE_WINDOW)
        rho = np.linspace(0.0, r, n + 1)[:-1]
        phi = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        rr, pp = np.meshgrid(rho, phi, indexing="ij")
        return (cu + rr * np.cos(pp)).ravel(), (cv + rr * np.sin(pp)).ravel()


@dataclass(frozen=True, eq=False)
class Surface:
    kind: str
    params: Mapping[str, Any]
    domain: ChartDomain
    curvature_upper_bound: float | None = None
    sample_step: float = 0.01
    _sd: tuple = field(repr=False, default=())

    @property
    def bound_radius(self) -> float | None:
        """R with K <= 1/R^2, when a positive bound is declared."""
        if self.curvature_upper_bound is None or self.curvature_upper_bound <= 0:
            return None
        return 1.0 / math.sqrt(self.curvature_upper_bound)

    def contains(self, p: SurfacePoint) -> bool:
        return bool(K.in_domain(self._sd, float(p.u), float(p.v)))

    def require(self, p: SurfacePoint) -> None:
        if not self.contains(p):
            raise DomainError(f"point ({p.u:.6g}, {p.v:.6g}) is outside the {self.kind} chart domain")

    def wrap_dv(self, dv):
        """Reduce a v-difference by the chart period (no-op for aperiodic charts)."""
        if self.domain.v_period > 0:
            per = self.domain.v_period
            return dv - per * np.round(np.asarray(dv) / per)
        return dv

    # vectorized accessors, arrays of u and v
    def metric_array(self, us, vs) -> np.ndarray:
        return K.metric_many(self._sd, np.ascontiguousarray(us, float), np.ascontiguousarray(vs, float))

    def christoffel_array(self, us, vs) -> np.ndarray:
        return K.christoffel_many(self._sd, np.ascontiguousarray(us, float), np.ascontiguousarray(vs, float))

    def curvature_array(self, us, vs) -> np.ndarray:
        return K.curvature_many(self._sd, np.ascontiguousarray(us, float), np.ascontiguousarray(vs, float))

    def inner(self, a: TangentVector, b: TangentVector) -> float:
        g11, g12, g22 = metric_at(self, a.base)
        return g11 * a.du * b.du + g12 * (a.du * b.dv + a.dv * b.du) + g22 * a.dv * b.dv

    def norm(self, a: TangentVector) -> float:
        return math.sqrt(max(self.inner(a, a), 0.0))

    def frame_direction(self, p: SurfacePoint, alpha: float) -> TangentVector:
        du, dv = K.frame_direction(self._sd, float(p.u), float(p.v), float(alpha))
        return TangentVector(p, du, dv)

    def frame_angle(self, vec: TangentVector) -> float:
        alpha, _ = K.frame_angle(self._sd, float(vec.base.u), float(vec.base.v), float(vec.du), float(vec.dv))
        return alpha

    def rotate90(self, vec: TangentVector) -> TangentVector:
        du, dv = K.rot90(self._sd, float(vec.base.u), float(vec.base.v), float(vec.du), float(vec.dv))
        return TangentVector(vec.base, du, dv)

    def lower(self, vec: TangentVector) -> np.ndarray:
        """Covector g(vec, .) in chart components."""
        g11, g12, g22 = metric_at(self, vec.base)
        return np.array([g11 * vec.du + g12 * vec.dv, g12 * vec.du + g22 * vec.dv])


def _positive(params, key, default=None):
    val = params.get(key, default)
    if val is None:
        raise SurfaceError(f"missing parameter {key!r}")
    val = float(val)
    if not (val > 0 and math.isfinite(val)):
        raise SurfaceError(f"parameter {key!r} must be positive and finite, got {val}")
    return val


def _domain_from_params(params) -> ChartDomain:
    dom = params.get("domain")
    if dom is None:
        raise SurfaceError("user metric needs a 'domain' with 'u'/'v' ranges or a 'disk'")
    if "disk" in dom:
        cu, cv, r = (float(x) for x in dom["disk"])
        if r <= 0:
            raise SurfaceError("disk radius must be positive")
        return ChartDomain("disk", (cu, cv, r), float(params.get("v_period", 0.0)))
    (u0, u1), (v0, v1) = dom["u"], dom["v"]
    if not (u0 < u1 and v0 < v1):
        raise SurfaceError("domain ranges must be increasing")
    return ChartDomain("rectangle", (float(u0), float(u1), float(v0), float(v1)),
                       float(params.get("v_period", 0.0)))


def make_surface(kind: str, params: Mapping[str, Any] | None = None, *,
                 curvature_upper_bound: float | None = None) -> Surface:
    """Build a surface of a known family.

    Families and their parameters:

    ``plane``
        Euclidean chart, K = 0.
    ``sphere``
        round sphere of radius ``R`` in polar/azimuth coordinates (u = polar
        angle, v = azimuth); ``theta_min`` trims the poles (default 1e-3).
    ``sphere-stereo``
        round sphere of radius ``R`` in stereographic coordinates from the
        south pole; the equator is the circle of radius ``R`` and the north
        pole is the origin. ``chart_radius`` bounds the chart (default 50 R).
    ``hyperbolic-disk``
        Poincare disk with metric ``4 a^2 (du^2 + dv^2) / (1 - r^2)^2``,
        K = -1/a^2 (``a`` defaults to 1).
    ``ellipsoid``
        spheroid with semi-axes ``(a, a, c)`` in polar/azimuth coordinates.
    ``user``
        metric coefficients ``g11``, ``g12``, ``g22`` as expressions in u, v
        plus a ``domain`` (``{"u": [lo, hi], "v": [lo, hi]}`` or
        ``{"disk": [cu, cv, r]}``) and optional ``v_period``.

    Sphere and ellipsoid declare their exact curvature maximum when no
    ``curvature_upper_bound`` is given. A declared bound is checked against
    curvature sampled on a probe grid.
    """
    params = dict(params or {})
    if kind not in _KIND_IDS:
        raise SurfaceError(f"unknown surface kind {kind!r}; expected one of {', '.join(KINDS)}")
    empty_i = np.zeros(0, dtype=np.int64)
    empty_f = np.zeros(0)
    ops, vals, offs = empty_i, empty_f, np.zeros(4, dtype=np.int64)
    step = 0.01
    default_bound = None
    inf = math.inf

    if kind == "plane":
        prm = np.zeros(1)
        domain = ChartDomain("rectangle", (-inf, inf, -inf, inf))
    elif kind == "sphere":
        R = _positive(params, "R", 1.0)
        tmin = float(params.get("theta_min", 1e-3))
        if not 0 < tmin < 0.5:
            raise SurfaceError("theta_min must lie in (0, 0.5)")
        prm = np.array([R])
        domain = ChartDomain("rectangle", (tmin, math.pi - tmin, -inf, inf), 2 * math.pi)
        default_bound = 1.0 / R**2
        step = 0.01 * min(R, 1.0)
    elif kind == "sphere-stereo":
        R = _positive(params, "R", 1.0)
        rmax = _positive(params, "chart_radius", 50.0 * R)
        prm = np.array([R])
        domain = ChartDomain("disk", (0.0, 0.0, rmax))
        default_bound = 1.0 / R**2
        step = 0.01 * min(R, 1.0)
    elif kind == "hyperbolic-disk":
        a = _positive(params, "a", 1.0)
        prm = np.array([a])
        domain = ChartDomain("disk", (0.0, 0.0, 1.0))
    elif kind == "ellipsoid":
        a = _positive(params, "a", 1.0)
        c = _positive(params, "c")
        tmin = float(params.get("theta_min", 1e-3))
        prm = np.array([a, c])
        domain = ChartDomain("rectangle", (tmin, math.pi - tmin, -inf, inf), 2 * math.pi)
        default_bound = c**2 / min(a, c) ** 4
        step = 0.01 * min(1.0, 1.0 / math.sqrt(default_bound))
    else:
        try:
            progs = [compile_expression(params[key]) for key in ("g11", "g12", "g22")]
        except KeyError as exc:
            raise SurfaceError(f"user metric is missing coefficient {exc.args[0]!r}") from None
        ops, vals, offs = pack(progs)
        prm = np.zeros(1)
        domain = _domain_from_params(params)

    bound = default_bound if curvature_upper_bound is None else float(curvature_upper_bound)
    if bound is not None and not math.isfinite(bound):
        raise SurfaceError("curvature_upper_bound must be finite")
    if bound is not None and bound > 0:
        step = min(step, 0.01 / math.sqrt(bound))

    sd = (np.int64(_KIND_IDS[kind]), prm, ops, vals, offs, domain.as_array())
    surf = Surface(kind, params, domain, bound, step, sd)

    us, vs = domain.probe_grid()
    g = surf.metric_array(us, vs)
    det = g[:, 0] * g[:, 2] - g[:, 1] ** 2
    if not (np.all(np.isfinite(g)) and np.all(g[:, 0] > 0) and np.all(det > 0)):
        raise SurfaceError(f"{kind} metric is not symmetric positive definite on the probe grid")
    if curvature_upper_bound is not None:
        ks = surf.curvature_array(us, vs)
        tol = 1e-6 if kind == "user" else 1e-9
        if np.nanmax(ks) > bound + tol:
            raise SurfaceError(
                f"declared curvature bound {bound:.6g} is exceeded: sampled K reaches {np.nanmax(ks):.6g}")
    return surf


def metric_at(s: Surface, p: SurfacePoint) -> tuple[float, float, float]:
    """Metric coefficients (g11, g12, g22) at ``p``."""
    s.require(p)
    return K.metric(s._sd, float(p.u), float(p.v))


def christoffel_at(s: Surface, p: SurfacePoint) -> dict[str, float]:
    """Christoffel symbols keyed ``"k_ij"`` with indices 1 = u, 2 = v.

    Symmetric keys (``1_21``, ``2_21``) are included for convenience.
    """
    s.require(p)
    g111, g112, g122, g211, g212, g222 = K.christoffel(s._sd, float(p.u), float(p.v))
    return {"1_11": g111, "1_12": g112, "1_21": g112, "1_22": g122,
            "2_11": g211, "2_12": g212, "2_21": g212, "2_22": g222}


def curvature_at(s: Surface, p: SurfacePoint) -> float:
    s.require(p)
    return K.curvature(s._sd, float(p.u), float(p.v))


def angle_between_vectors(s: Surface, a: TangentVector, b: TangentVector) -> float:
    """Unoriented angle in [0, pi] between two tangent vectors at one point."""
    if a.base != b.base:
        raise ValueError("tangent vectors have different base points")
    g11, g12, g22 = metric_at(s, a.base)
    na = g11 * a.du**2 + 2 * g12 * a.du * a.dv + g22 * a.dv**2
    nb = g11 * b.du**2 + 2 * g12 * b.du * b.dv + g22 * b.dv**2
    if not (na > 0 and nb > 0):
        raise ValueError("zero-length tangent vector")
    dot = g11 * a.du * b.du + g12 * (a.du * b.dv + a.dv * b.du) + g22 * a.dv * b.dv
    # atan2 form of arccos(dot / |a||b|): same value, accurate near 0 and pi
    cross = math.sqrt(g11 * g22 - g12 * g12) * (a.du * b.dv - a.dv * b.du)
    return math.atan2(abs(cross), dot)


def signed_angle(s: Surface, a: TangentVector, b: TangentVector) -> float:
    """Oriented angle in (-pi, pi] from ``a`` to ``b`` (chart orientation)."""
    g11, g12, g22 = metric_at(s, a.base)
    dot = g11 * a.du * b.du + g12 * (a.du * b.dv + a.dv * b.du) + g22 * a.dv * b.dv
    cross = math.sqrt(g11 * g22 - g12 * g12) * (a.du * b.dv - a.dv * b.du)
    return math.atan2(cross, dot)
