"""Geodesics: exponential map, two-point shooting and distance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from geonet import _kernels as K
from geonet.surfaces import Surface, SurfacePoint, TangentVector, metric_at

RTOL = 1e-10
ATOL = 1e-12
BVP_TOL = 1e-9
N_SEEDS = 8
NEWTON_MAX_ITER = 60
# separation of two shooting solutions in initial angle before they count as distinct
DISTINCT_ALPHA = 1e-3


class GeodesicError(RuntimeError):
    """Base class for geodesic construction failures."""


class ChartExitError(GeodesicError):
    def __init__(self, t_exit: float, message: str | None = None):
        self.t_exit = t_exit
        super().__init__(message or f"geodesic leaves the chart domain at t = {t_exit:.6g}")


class StepUnderflowError(GeodesicError):
    def __init__(self, t_fail: float):
        self.t_fail = t_fail
        super().__init__(f"integrator step size underflow at t = {t_fail:.6g}")


class NoConvergenceError(GeodesicError):
    def __init__(self, best_residual: float, message: str | None = None):
        self.best_residual = best_residual
        super().__init__(message or f"shooting did not converge (best endpoint miss {best_residual:.3g})")


class NonUniqueGeodesicError(GeodesicError):
    def __init__(self, solutions):
        self.solutions = solutions
        lens = ", ".join(f"{s.length:.9g}@{s.alpha:.4f}" for s in solutions[:4])
        super().__init__(f"endpoints are joined by several shortest geodesics (length@angle: {lens})")


@dataclass(frozen=True)
class LogResult:
    """Initial data of the geodesic from ``base`` to ``target``."""

    base: SurfacePoint
    target: SurfacePoint
    alpha: float
    length: float
    residual: float
    direction: TangentVector

    @property
    def guess(self) -> tuple[float, float]:
        return self.alpha, self.length


@dataclass(eq=False)
class GeodesicPath:
    """Unit-speed geodesic sampled at the integrator's accepted steps.

    ``t`` is arc length; ``points``, ``tangents`` and ``accels`` are chart
    components of position, velocity and acceleration at each node. Values
    between nodes come from cubic Hermite interpolation.
    """

    surface: Surface
    t: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    accels: np.ndarray
    alpha: float = math.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_length(self) -> float:
        return float(self.t[-1])

    @property
    def start(self) -> SurfacePoint:
        return SurfacePoint(float(self.points[0, 0]), float(self.points[0, 1]))

    @property
    def end(self) -> SurfacePoint:
        return SurfacePoint(float(self.points[-1, 0]), float(self.points[-1, 1]))

    @cached_property
    def _pos_spline(self):
        return CubicHermiteSpline(self.t, self.points, self.tangents, axis=0)

    @cached_property
    def _vel_spline(self):
        return CubicHermiteSpline(self.t, self.tangents, self.accels, axis=0)

    def _check_t(self, t):
        t = np.asarray(t, dtype=float)
        L = self.total_length
        if np.any(t < -1e-12 * max(1.0, L)) or np.any(t > L * (1 + 1e-12) + 1e-12):
            raise ValueError(f"arc length outside [0, {L:.6g}]")
        return np.clip(t, 0.0, L)

    def positions(self, t) -> np.ndarray:
        if len(self.t) == 1:
            return np.broadcast_to(self.points[0], np.shape(t) + (2,)).copy()
        return self._pos_spline(self._check_t(t))

    def velocities(self, t) -> np.ndarray:
        if len(self.t) == 1:
            return np.broadcast_to(self.tangents[0], np.shape(t) + (2,)).copy()
        return self._vel_spline(self._check_t(t))

    def point_at(self, t: float) -> SurfacePoint:
        u, v = self.positions(float(t))
        return SurfacePoint(float(u), float(v))

    def tangent_at(self, t: float) -> TangentVector:
        p = self.point_at(t)
        du, dv = self.velocities(float(t))
        return TangentVector(p, float(du), float(dv))

    def start_tangent(self) -> TangentVector:
        return TangentVector(self.start, float(self.tangents[0, 0]), float(self.tangents[0, 1]))

    def end_tangent(self) -> TangentVector:
        return TangentVector(self.end, float(self.tangents[-1, 0]), float(self.tangents[-1, 1]))

    def reversed(self) -> "GeodesicPath":
        L = self.total_length
        rev = GeodesicPath(self.surface, (L - self.t[::-1]).copy(), self.points[::-1].copy(),
                           -self.tangents[::-1].copy(), self.accels[::-1].copy())
        rev.alpha = self.surface.frame_angle(rev.start_tangent())
        return rev

    def speed_deviation(self) -> float:
        """max over nodes of | |tangent|_g - 1 |."""
        g = self.surface.metric_array(self.points[:, 0], self.points[:, 1])
        du, dv = self.tangents[:, 0], self.tangents[:, 1]
        n2 = g[:, 0] * du * du + 2 * g[:, 1] * du * dv + g[:, 2] * dv * dv
        return float(np.max(np.abs(np.sqrt(n2) - 1.0)))


def _raise_status(status: int, t: float):
    if status == K.STATUS_EXIT:
        raise ChartExitError(t)
    if status == K.STATUS_UNDERFLOW:
        raise StepUnderflowError(t)
    if status != K.STATUS_OK:
        raise GeodesicError(f"integration aborted at t = {t:.6g} (status {status})")


def shoot(s: Surface, p: SurfacePoint, v: TangentVector, length: float, *,
          max_step: float | None = None, rtol: float = RTOL, atol: float = ATOL) -> GeodesicPath:
    """Unit-speed geodesic of the given length from ``p`` in direction ``v``."""
    s.require(p)
    if length < 0 or not math.isfinite(length):
        raise ValueError("length must be finite and non-negative")
    norm = s.norm(TangentVector(p, v.du, v.dv))
    if not norm > 0:
        raise ValueError("initial direction must be nonzero")
    max_step = s.sample_step if max_step is None else max_step
    y0 = np.array([p.u, p.v, v.du / norm, v.dv / norm, 0.0, 0.0])
    status, t, _, T, Y, F = K.integrate(s._sd, y0, float(length), rtol, atol, max_step,
                                        False, 1, np.empty(0))
    _raise_status(status, t)
    path = GeodesicPath(s, T, Y[:, :2].copy(), Y[:, 2:4].copy(), F[:, 2:4].copy())
    path.alpha = s.frame_angle(TangentVector(p, y0[2], y0[3]))
    return path


def exp_point(s: Surface, p: SurfacePoint, v: TangentVector, length: float, *,
              rtol: float = RTOL, atol: float = ATOL) -> tuple[SurfacePoint, TangentVector]:
    """Endpoint and end tangent of ``shoot`` without sampling the path."""
    s.require(p)
    alpha = s.frame_angle(TangentVector(p, v.du, v.dv))
    status, t, y = K.shoot_state(s._sd, float(p.u), float(p.v), alpha, float(length), False,
                                 rtol, atol, 10.0)
    _raise_status(status, t)
    q = SurfacePoint(float(y[0]), float(y[1]))
    return q, TangentVector(q, float(y[2]), float(y[3]))


def chart_guess(s: Surface, p: SurfacePoint, q: SurfacePoint) -> tuple[float, float]:
    """Initial angle and length from the straight chart segment p -> q."""
    du = q.u - p.u
    dv = float(s.wrap_dv(q.v - p.v))
    mid = SurfacePoint(p.u + 0.5 * du, p.v + 0.5 * dv)
    if not s.contains(mid):
        mid = p
    g11, g12, g22 = metric_at(s, mid)
    length = math.sqrt(max(g11 * du * du + 2 * g12 * du * dv + g22 * dv * dv, 1e-300))
    alpha = s.frame_angle(TangentVector(p, du, dv)) if (du or dv) else 0.0
    return alpha, length


def _newton(s, p, q, alpha, length, tol, max_length):
    return K.log_map(s._sd, float(p.u), float(p.v), float(q.u), float(q.v), float(alpha),
                     float(length), tol, float(max_length or 0.0), NEWTON_MAX_ITER, RTOL, ATOL, 10.0)


def _make_log(s, p, q, alpha, length, resid) -> LogResult:
    alpha = math.remainder(alpha, 2 * math.pi)
    return LogResult(p, q, alpha, length, resid, s.frame_direction(p, alpha))


def _multistart(s, p, q, tol, max_length, seeds):
    a0, l0 = chart_guess(s, p, q)
    found = []
    best = math.inf
    for k in range(seeds):
        status, a, length, resid, _ = _newton(s, p, q, a0 + 2 * math.pi * k / seeds, l0, tol, max_length)
        best = min(best, resid)
        if resid <= tol and (max_length is None or length <= max_length):
            found.append(_make_log(s, p, q, a, length, resid))
    return found, best


def _distinct(found, tol_len):
    """Collapse solutions that share the same initial angle."""
    found = sorted(found, key=lambda r: r.length)
    uniq = []
    for r in found:
        if all(abs(math.remainder(r.alpha - o.alpha, 2 * math.pi)) > DISTINCT_ALPHA for o in uniq):
            uniq.append(r)
    return uniq


def log_map(s: Surface, p: SurfacePoint, q: SurfacePoint, *, guess: tuple[float, float] | None = None,
            tol: float = BVP_TOL, max_length: float | None = None, seeds: int = N_SEEDS) -> LogResult:
    """Initial unit direction and length of a geodesic from ``p`` to ``q``.

    Newton shooting starts from ``guess`` (angle, length) when given and falls
    back to the multi-start seeds; the shortest converged solution is returned.
    No uniqueness check is made; use :func:`connect` for that.
    """
    s.require(p)
    s.require(q)
    if guess is not None:
        status, a, length, resid, _ = _newton(s, p, q, guess[0], guess[1], tol, max_length)
        if resid <= tol and (max_length is None or length <= max_length):
            return _make_log(s, p, q, a, length, resid)
    found, best = _multistart(s, p, q, tol, max_length, seeds)
    if not found:
        raise NoConvergenceError(best)
    return min(found, key=lambda r: r.length)


def connect(s: Surface, p: SurfacePoint, q: SurfacePoint, *, guess: tuple[float, float] | None = None,
            multistart: bool = True, tol: float = BVP_TOL, max_length: float | None = None,
            seeds: int = N_SEEDS, allow_non_unique: bool = False) -> GeodesicPath:
    """Shortest geodesic from ``p`` to ``q`` found by shooting.

    With ``multistart`` every seed is solved; a second converged solution with
    a different initial angle and (nearly) the same length as the shortest one
    raises :class:`NonUniqueGeodesicError` unless ``allow_non_unique``.
    """
    s.require(p)
    s.require(q)
    if p == q:
        raise ValueError("connect needs distinct endpoints")
    if multistart:
        found, best = _multistart(s, p, q, tol, max_length, seeds)
        if guess is not None:
            status, a, length, resid, _ = _newton(s, p, q, guess[0], guess[1], tol, max_length)
            if resid <= tol and (max_length is None or length <= max_length):
                found.append(_make_log(s, p, q, a, length, resid))
        if not found:
            raise NoConvergenceError(best)
        uniq = _distinct(found, tol)
        shortest = uniq[0]
        ties = [r for r in uniq[1:] if abs(r.length - shortest.length) <= 1e-6 * max(1.0, shortest.length)]
        non_unique = bool(ties)
        if non_unique and not allow_non_unique:
            raise NonUniqueGeodesicError([shortest, *ties])
        sol = shortest
    else:
        sol = log_map(s, p, q, guess=guess, tol=tol, max_length=max_length, seeds=seeds)
        uniq = [sol]
        non_unique = False
    path = shoot(s, p, sol.direction, sol.length)
    path.alpha = sol.alpha
    path.diagnostics = {
        "residual": sol.residual,
        "n_solutions": len(uniq),
        "lengths": [r.length for r in uniq],
        "non_unique": non_unique,
    }
    return path


def distance(s: Surface, p: SurfacePoint, q: SurfacePoint, **kwargs) -> float:
    """Geodesic distance; 0 for coincident points, otherwise ``connect(p, q)`` length."""
    if p == q:
        return 0.0
    return connect(s, p, q, **kwargs).total_length
