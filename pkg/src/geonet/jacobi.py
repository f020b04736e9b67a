"""Scalar Jacobi fields along geodesics of a surface.

On a surface an orthogonal Jacobi field is ``J(t) = j(t) w(t)`` with ``w`` the
parallel unit normal of the geodesic, so only the scalar equation
``j'' + K(gamma(t)) j = 0`` is integrated. ``|J|^2 = j^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicHermiteSpline

from geonet import _kernels as K
from geonet.geodesics import ATOL, RTOL, GeodesicPath, _raise_status
from geonet.surfaces import Surface


@dataclass(eq=False)
class JacobiScalar:
    geodesic: GeodesicPath
    t: np.ndarray
    j: np.ndarray
    jp: np.ndarray
    curvature: np.ndarray
    j0: float
    jp0: float

    def _splines(self):
        if not hasattr(self, "_sp"):
            jpp = -self.curvature * self.j
            self._sp = (CubicHermiteSpline(self.t, self.j, self.jp),
                        CubicHermiteSpline(self.t, self.jp, jpp))
        return self._sp

    def value(self, t):
        return self._splines()[0](_in_range(self, t))

    def derivative(self, t):
        return self._splines()[1](_in_range(self, t))

    def norm_sq_prime_nodes(self) -> np.ndarray:
        return 2.0 * self.j * self.jp


def _in_range(J: JacobiScalar, t):
    t = np.asarray(t, dtype=float)
    L = J.t[-1]
    if np.any(t < -1e-12) or np.any(t > L + 1e-12 * max(1.0, L)):
        raise ValueError(f"t outside the sampled range [0, {L:.6g}]")
    return np.clip(t, 0.0, L)


def solve_jacobi(s: Surface, g: GeodesicPath, j0: float, jp0: float) -> JacobiScalar:
    """Integrate j'' + K j = 0 along ``g`` and sample it on ``g``'s nodes.

    The geodesic is re-integrated together with the field, with steps forced
    to land on every node of ``g``.
    """
    nodes = g.t
    if j0 == 0.0 and jp0 == 0.0:
        z = np.zeros_like(nodes)
        return JacobiScalar(g, nodes.copy(), z, z.copy(), s.curvature_array(g.points[:, 0], g.points[:, 1]),
                            0.0, 0.0)
    y0 = np.array([g.points[0, 0], g.points[0, 1], g.tangents[0, 0], g.tangents[0, 1],
                   float(j0), float(jp0)])
    status, t, _, T, Y, F = K.integrate(s._sd, y0, float(nodes[-1]), RTOL, ATOL, 10.0,
                                        True, 2, np.ascontiguousarray(nodes[1:]))
    _raise_status(status, t)
    if len(T) != len(nodes):
        raise RuntimeError("Jacobi integration did not land on every geodesic node")
    kappa = s.curvature_array(Y[:, 0], Y[:, 1])
    return JacobiScalar(g, T, Y[:, 4].copy(), Y[:, 5].copy(), kappa, float(j0), float(jp0))


def norm_sq_prime(J: JacobiScalar, t):
    """(|J|^2)'(t) = 2 j(t) j'(t), from Hermite interpolation of the samples."""
    return 2.0 * J.value(t) * J.derivative(t)


def index_form(s: Surface, g: GeodesicPath, V, t0: float) -> float:
    """I_{t0}(V, V) = int_0^t0 (v'^2 - K v^2) dt by composite Simpson.

    ``V`` is a triple of arrays ``(t, v, v')`` on a grid starting at 0 and
    containing ``t0``.
    """
    tv, v, vp = (np.asarray(a, dtype=float) for a in V)
    if t0 > g.total_length * (1 + 1e-12):
        raise ValueError("t0 lies beyond the geodesic")
    keep = tv <= t0 + 1e-12 * max(1.0, t0)
    tv, v, vp = tv[keep], v[keep], vp[keep]
    if len(tv) < 8:
        raise ValueError("field grid too coarse: need at least 8 nodes up to t0")
    if abs(tv[0]) > 1e-12 or abs(tv[-1] - t0) > 1e-9 * max(1.0, t0):
        raise ValueError("field grid must start at 0 and contain t0")
    if abs(v[0]) > 1e-12:
        raise ValueError("comparison field must vanish at t = 0")
    pts = g.positions(tv)
    kappa = s.curvature_array(pts[:, 0], pts[:, 1])
    return float(simpson(vp * vp - kappa * v * v, x=tv))


def first_conjugate_point(J: JacobiScalar, tol: float = 1e-9) -> float | None:
    """Smallest t > 0 with j(t) = 0, or None when j keeps its sign."""
    if J.j0 != 0.0 or J.jp0 == 0.0:
        raise ValueError("conjugate points are defined for fields with j(0) = 0, j'(0) != 0")
    sgn = math.copysign(1.0, J.jp0)
    vals = sgn * J.j
    for i in range(1, len(vals)):
        if vals[i] == 0.0:
            return float(J.t[i])
        if vals[i] < 0.0:
            lo, hi = float(J.t[i - 1]), float(J.t[i])
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if sgn * float(J.value(mid)) > 0.0:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
    return None


@dataclass(frozen=True)
class WindowCheck:
    ok: bool
    margin: float
    t_margin: float
    n_nodes: int


def monotone_window_check(s: Surface, g: GeodesicPath, t_max: float) -> WindowCheck:
    """Is (|J|^2)' > 0 at every node in (0, t_max] for the field j(0)=0, j'(0)=1?"""
    if t_max > g.total_length * (1 + 1e-12):
        raise ValueError("t_max exceeds the geodesic length")
    J = solve_jacobi(s, g, 0.0, 1.0)
    sel = (J.t > 0.0) & (J.t <= t_max)
    if not np.any(sel):
        raise ValueError("no geodesic nodes in (0, t_max]")
    vals = J.norm_sq_prime_nodes()[sel]
    i = int(np.argmin(vals))
    return WindowCheck(bool(np.all(vals > 0.0)), float(vals[i]), float(J.t[sel][i]), int(sel.sum()))


def sphere_norm_sq_prime(t, R: float):
    """(|J~|^2)' = 2R sin(t/R) cos(t/R) on the round sphere of radius R."""
    t = np.asarray(t, dtype=float)
    return 2.0 * R * np.sin(t / R) * np.cos(t / R)


def comparison_gap(s: Surface, g: GeodesicPath, R: float) -> np.ndarray:
    """Node-wise (|J|^2)' minus the radius-R sphere value along ``g``."""
    J = solve_jacobi(s, g, 0.0, 1.0)
    return J.norm_sq_prime_nodes() - sphere_norm_sq_prime(J.t, R)
