"""Geodesic triangles: sides, interior angles, Gauss-Bonnet and hypotheses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from geonet import geodesics as geo
from geonet.geodesics import GeodesicError, GeodesicPath, connect, exp_point, log_map
from geonet.surfaces import Surface, SurfacePoint, TangentVector, angle_between_vectors, signed_angle

TWO_THIRDS_PI = 2.0 * math.pi / 3.0
DIAMETER_MARGIN = 1.02
# an angle this close to 0 or pi marks the vertex triple as collinear
DEGENERATE_ANGLE_TOL = 1e-6
VERTICES = ("A", "B", "C")


class TriangleError(ValueError):
    """The triangle cannot be built or its interior is not representable."""


@dataclass(eq=False)
class Triangle:
    """Geodesic triangle with sides AB, BC, CA.

    ``orientation`` is +1 when the interior lies to the left of the cycle
    A -> B -> C -> A in the chart and -1 otherwise; the vertex labels are
    never permuted.
    """

    surface: Surface
    A: SurfacePoint
    B: SurfacePoint
    C: SurfacePoint
    sides: tuple[GeodesicPath, GeodesicPath, GeodesicPath]
    angles: tuple[float, float, float]
    orientation: int
    degenerate: bool
    sides_disjoint: bool
    boundary: np.ndarray = field(repr=False)
    closed: bool = True

    @property
    def vertices(self) -> tuple[SurfacePoint, SurfacePoint, SurfacePoint]:
        return self.A, self.B, self.C

    @property
    def side_lengths(self) -> tuple[float, float, float]:
        return tuple(g.total_length for g in self.sides)

    def vertex(self, tag: str) -> SurfacePoint:
        return self.vertices[_tag_index(tag)]

    def lift(self, p: SurfacePoint) -> np.ndarray:
        """Chart coordinates of ``p`` shifted by the v-period to sit near the boundary lift."""
        per = self.surface.domain.v_period
        q = np.array([p.u, p.v])
        if per > 0:
            centre = self.boundary[:, 1].mean()
            q[1] += per * round((centre - p.v) / per)
        return q

    def contains(self, p: SurfacePoint, *, strict: bool = True) -> bool:
        """Winding-number test of ``p`` against the chart image of the boundary."""
        if not self.closed:
            raise TriangleError("the boundary does not close in the chart; the interior is not representable")
        q = self.lift(p)
        d = _segment_distance(self.boundary, q)
        scale = max(1.0, float(np.ptp(self.boundary, axis=0).max()))
        if d <= 1e-12 * scale:
            return not strict
        return bool(points_in_polygon(self.boundary, q[None, :])[0])


def _tag_index(tag: str) -> int:
    try:
        return VERTICES.index(tag)
    except ValueError:
        raise ValueError(f"vertex tag must be one of A, B, C, got {tag!r}") from None


def points_in_polygon(poly: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Even-odd crossing test of ``pts`` (n x 2) against closed polygon ``poly``."""
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    px, py = pts[:, 0:1], pts[:, 1:2]
    straddle = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    return np.count_nonzero(straddle & (px < xc), axis=1) % 2 == 1


def _segment_distance(poly: np.ndarray, q: np.ndarray) -> float:
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.clip(np.einsum("ij,ij->i", q - a, ab) / den, 0.0, 1.0)
    lam = np.where(den > 0, lam, 0.0)
    return float(np.min(np.linalg.norm(a + lam[:, None] * ab - q, axis=1)))


def _shift_to(s: Surface, pts: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Translate a lifted chart curve by whole v-periods so it starts next to ``start``."""
    per = s.domain.v_period
    if per <= 0:
        return pts
    k = round((start[1] - pts[0, 1]) / per)
    out = pts.copy()
    out[:, 1] += k * per
    return out


def _toward(s: Surface, base: SurfacePoint, tangent: np.ndarray, sign: float) -> TangentVector:
    return TangentVector(base, sign * float(tangent[0]), sign * float(tangent[1]))


def build_triangle(s: Surface, A: SurfacePoint, B: SurfacePoint, C: SurfacePoint, **connect_kw) -> Triangle:
    """Connect the three vertices and measure the interior angles.

    Raises the geodesic errors of :func:`connect` (including non-uniqueness).
    Collinear triples are returned with ``degenerate`` set.
    """
    for p in (A, B, C):
        s.require(p)
    if A == B or B == C or C == A:
        raise TriangleError("triangle vertices must be pairwise distinct")
    ab = connect(s, A, B, **connect_kw)
    bc = connect(s, B, C, **connect_kw)
    ca = connect(s, C, A, **connect_kw)

    # tangents at each vertex pointing along the two incident sides
    tA = (_toward(s, A, ab.tangents[0], 1.0), _toward(s, A, ca.tangents[-1], -1.0))
    tB = (_toward(s, B, bc.tangents[0], 1.0), _toward(s, B, ab.tangents[-1], -1.0))
    tC = (_toward(s, C, ca.tangents[0], 1.0), _toward(s, C, bc.tangents[-1], -1.0))
    angles = tuple(angle_between_vectors(s, a, b) for a, b in (tA, tB, tC))
    degenerate = any(a < DEGENERATE_ANGLE_TOL or a > math.pi - DEGENERATE_ANGLE_TOL for a in angles)

    p_ab = ab.points
    p_bc = _shift_to(s, bc.points, p_ab[-1])
    p_ca = _shift_to(s, ca.points, p_bc[-1])
    closed = bool(np.linalg.norm(p_ca[-1] - p_ab[0]) < 1e-6 * max(1.0, np.abs(p_ab[0]).max()))
    boundary = np.vstack([p_ab[:-1], p_bc[:-1], p_ca[:-1]])
    x, y = boundary[:, 0], boundary[:, 1]
    area2 = float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    if not degenerate:
        orientation = 1 if signed_angle(s, tA[0], tA[1]) > 0 else -1
    else:
        orientation = 1 if area2 >= 0 else -1

    return Triangle(s, A, B, C, (ab, bc, ca), angles, orientation, degenerate,
                    _sides_disjoint(ab, bc, ca, p_ab, p_bc, p_ca), boundary, closed)


def _sides_disjoint(ab, bc, ca, p_ab, p_bc, p_ca, n: int = 200) -> bool:
    """Sampled check that the three sides meet only at shared vertices."""
    def sample(g, lifted):
        t = np.linspace(0.0, g.total_length, n)
        pts = g.positions(t) + (lifted[0] - g.points[0])
        return t, pts

    paths = [(ab, *sample(ab, p_ab)), (bc, *sample(bc, p_bc)), (ca, *sample(ca, p_ca))]
    # (i, j, end of i, end of j) for the vertex shared by sides i and j
    pairs = [(0, 1, 1, 0), (1, 2, 1, 0), (2, 0, 1, 0)]
    for i, j, ei, ej in pairs:
        gi, ti, pi = paths[i]
        gj, tj, pj = paths[j]
        Li, Lj = gi.total_length, gj.total_length
        delta = 0.02 * min(Li, Lj)
        di = ti if ei == 0 else Li - ti
        dj = tj if ej == 0 else Lj - tj
        mi = di > delta
        mj = dj > delta
        d = np.linalg.norm(pi[mi][:, None, :] - pj[mj][None, :, :], axis=2)
        if d.size and d.min() <= 1e-9:
            return False
    return True


def interior_angle(t: Triangle, tag: str) -> float:
    """Interior angle at vertex ``tag`` ("A", "B" or "C")."""
    return t.angles[_tag_index(tag)]


def angle_excess(t: Triangle) -> float:
    return sum(t.angles) - math.pi


def _gauss_legendre_cells(n: int, order: int = 2) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, n + 1)
    h = 1.0 / n
    nodes = (edges[:-1, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * w, n)
    return nodes, weights


def _patch_quadrature(t: Triangle, resolution: int):
    """Nodes and area weights of the Coons-patch quadrature of the interior.

    The interior is parametrized over the unit square by the Coons patch
    bounded by the sides A->B, A->C and B->C (the edge at A collapses to the
    vertex) and integrated with 2x2 Gauss-Legendre on ``resolution^2`` cells.
    Returns chart coordinates ``us, vs`` and weights including sqrt(det g).
    """
    if t.degenerate:
        raise TriangleError("degenerate triangle: the interior is not representable")
    if not t.closed:
        raise TriangleError("the boundary does not close in the chart")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    s = t.surface
    ab, bc, ca = t.sides
    ac = ca.reversed()
    A = ab.points[0]
    off_bc = _shift_to(s, bc.points, ab.points[-1])[0] - bc.points[0]
    off_ac = _shift_to(s, ac.points, A)[0] - ac.points[0]
    B = ab.points[-1]
    C = bc.points[-1] + off_bc

    nodes, weights = _gauss_legendre_cells(resolution)
    Lab, Lbc, Lac = ab.total_length, bc.total_length, ac.total_length
    cab, dab = ab.positions(nodes * Lab), ab.velocities(nodes * Lab) * Lab
    cac, dac = ac.positions(nodes * Lac) + off_ac, ac.velocities(nodes * Lac) * Lac
    cbc, dbc = bc.positions(nodes * Lbc) + off_bc, bc.velocities(nodes * Lbc) * Lbc

    # axis 0 runs along BC (s), axis 1 outwards from A (tau)
    S = nodes[:, None, None]
    T = nodes[None, :, None]
    edge = cbc[:, None, :] - (1 - S) * B - S * C
    P = (1 - S) * cab[None, :, :] + S * cac[None, :, :] + T * edge
    Ps = -cab[None, :, :] + cac[None, :, :] + T * (dbc[:, None, :] + B - C)
    Pt = (1 - S) * dab[None, :, :] + S * dac[None, :, :] + edge
    # signed Jacobian: any fold of the patch cancels, leaving the boundary's enclosed region
    jac = (Ps[..., 0] * Pt[..., 1] - Ps[..., 1] * Pt[..., 0]).ravel()
    jac *= np.sign(np.sum(jac * np.repeat(weights, len(weights))))

    us, vs = P[..., 0].ravel(), P[..., 1].ravel()
    g = s.metric_array(us, vs)
    sqrt_det = np.sqrt(g[:, 0] * g[:, 2] - g[:, 1] ** 2)
    w = (weights[:, None] * weights[None, :]).ravel()
    return us, vs, w * sqrt_det * jac


def curvature_integral(t: Triangle, resolution: int = 256) -> float:
    """Integral of K dA over the triangle interior."""
    us, vs, w = _patch_quadrature(t, resolution)
    return float(np.sum(w * t.surface.curvature_array(us, vs)))


def area(t: Triangle, resolution: int = 256) -> float:
    """Metric area of the triangle interior."""
    _, _, w = _patch_quadrature(t, resolution)
    return float(np.sum(w))


def gauss_bonnet_residual(t: Triangle, resolution: int = 256) -> float:
    """|int K dA - (iota_A + iota_B + iota_C - pi)|."""
    return abs(curvature_integral(t, resolution) - angle_excess(t))


@dataclass(frozen=True)
class DiameterEstimate:
    value: float
    n_points: int
    n_pairs: int
    n_failed: int
    pair: tuple[SurfacePoint, SurfacePoint] | None
    samples: tuple[SurfacePoint, ...] = ()
    lower_bound: bool = True


def _pair_length(s: Surface, p: SurfacePoint, q: SurfacePoint) -> float | None:
    found, _ = geo._multistart(s, p, q, geo.BVP_TOL, None, geo.N_SEEDS)
    if not found:
        return None
    return min(r.length for r in found)


def domain_samples(t: Triangle, n_samples: int) -> list[SurfacePoint]:
    """Deterministic low-discrepancy points of the closed triangle domain.

    Non-degenerate triangles use the geodesic fan from the lexicographically
    first vertex to points of the opposite side; degenerate ones fall back to
    Halton points of the chart bounding box kept by the winding test.
    """
    if n_samples < 3:
        raise ValueError("n_samples must be at least 3")
    s = t.surface
    halton = qmc.Halton(d=2, scramble=False).random(n_samples + 1)[1:]
    pts = []
    if not t.degenerate:
        order = sorted(range(3), key=lambda i: (t.vertices[i].u, t.vertices[i].v))
        apex = t.vertices[order[0]]
        p1, p2 = t.vertices[order[1]], t.vertices[order[2]]
        base = connect(s, p1, p2)
        to1 = log_map(s, apex, p1)
        to2 = log_map(s, apex, p2)
        for sx, tau in halton:
            X = base.point_at(sx * base.total_length)
            guess = ((1 - sx) * to1.alpha + sx * (to1.alpha + math.remainder(to2.alpha - to1.alpha, 2 * math.pi)),
                     (1 - sx) * to1.length + sx * to2.length)
            try:
                lg = log_map(s, apex, X, guess=guess)
                q, _ = exp_point(s, apex, lg.direction, math.sqrt(tau) * lg.length)
            except GeodesicError:
                continue
            pts.append(q)
        return pts
    if not t.closed:
        raise TriangleError("the boundary does not close in the chart")
    lo = t.boundary.min(axis=0)
    hi = t.boundary.max(axis=0)
    cand = lo + qmc.Halton(d=2, scramble=False).random(8 * n_samples + 1)[1:] * (hi - lo)
    inside = points_in_polygon(t.boundary, cand)
    for u, v in cand[inside][:n_samples]:
        p = SurfacePoint(float(u), float(v))
        if s.contains(p):
            pts.append(p)
    return pts


def triangle_diameter_estimate(t: Triangle, n_samples: int = 24) -> DiameterEstimate:
    """Largest pairwise geodesic distance over vertices plus domain samples.

    The result is a lower bound on the true diameter. Pairs whose shooting
    fails are skipped and counted in ``n_failed``.
    """
    s = t.surface
    samples = domain_samples(t, n_samples)
    pts = list(t.vertices) + samples
    best, arg, failed, pairs = 0.0, None, 0, 0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if pts[i] == pts[j]:
                continue
            pairs += 1
            length = _pair_length(s, pts[i], pts[j])
            if length is None:
                failed += 1
                continue
            if length > best:
                best, arg = length, (pts[i], pts[j])
    return DiameterEstimate(best, len(pts), pairs, failed, arg, tuple(samples))


@dataclass(frozen=True)
class PreconditionReport:
    angle_ok: tuple[bool, bool, bool]
    diameter_estimate: float
    diameter_ok: bool | None
    verdict: str
    max_sampled_curvature: float
    bound_radius: float | None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "angle_ok": list(self.angle_ok),
            "diameter_estimate": self.diameter_estimate,
            "diameter_ok": self.diameter_ok,
            "verdict": self.verdict,
            "max_sampled_curvature": self.max_sampled_curvature,
            "bound_radius": self.bound_radius,
            "notes": list(self.notes),
        }


def check_preconditions(t: Triangle, n_samples: int = 24) -> PreconditionReport:
    """Angle and diameter hypotheses of the existence theorems.

    ``pass`` needs every angle below 2 pi / 3 and, when a curvature bound
    1/R^2 is declared, a diameter estimate with ``1.02 * d < R pi / 2``. With
    no bound but positive sampled curvature the verdict is ``advisory``.
    """
    s = t.surface
    R = s.bound_radius
    angle_ok = tuple(bool(a < TWO_THIRDS_PI) for a in t.angles)
    notes = []
    if R is not None:
        diam = triangle_diameter_estimate(t, n_samples)
    else:
        # no radius to compare against: the vertex pairs give the reported lower bound
        diam = DiameterEstimate(max(t.side_lengths), 3, 3, 0, None)
        notes.append("no curvature bound declared: diameter estimate uses the vertices only")
    if t.degenerate:
        notes.append("degenerate triangle: the domain is taken as the bounded chart region of the boundary")
    if diam.n_failed:
        notes.append(f"{diam.n_failed} of {diam.n_pairs} sample pairs failed to connect")

    side_pts = np.vstack([g.points for g in t.sides])
    kappa = s.curvature_array(side_pts[:, 0], side_pts[:, 1])
    probes = list(diam.samples)
    if not probes and not t.degenerate:
        try:
            probes = domain_samples(t, 8)
        except GeodesicError:
            probes = []
    if probes:
        arr = np.array([[p.u, p.v] for p in probes])
        kappa = np.concatenate([kappa, s.curvature_array(arr[:, 0], arr[:, 1])])
    kmax = float(np.max(kappa))

    diameter_ok = None
    if R is not None:
        diameter_ok = bool(DIAMETER_MARGIN * diam.value < R * math.pi / 2)
    if all(angle_ok) and diameter_ok is not False:
        verdict = "pass"
        if R is None and kmax > 0 and not _nonpositive_bound(s):
            verdict = "advisory"
            notes.append("positive curvature sampled but no curvature bound declared")
    else:
        verdict = "fail"
    return PreconditionReport(angle_ok, diam.value, diameter_ok, verdict, kmax, R, tuple(notes))


def _nonpositive_bound(s: Surface) -> bool:
    return s.curvature_upper_bound is not None and s.curvature_upper_bound <= 0
