"""Balanced vertices of geodesic triangles on Riemannian surfaces."""

__version__ = "0.1.0"

from geonet.surfaces import (
    Surface,
    SurfacePoint,
    TangentVector,
    angle_between_vectors,
    christoffel_at,
    curvature_at,
    make_surface,
    metric_at,
)
from geonet.geodesics import GeodesicPath, connect, distance, shoot
from geonet.triangle import Triangle, build_triangle, check_preconditions, gauss_bonnet_residual
from geonet.jacobi import JacobiScalar, first_conjugate_point, index_form, monotone_window_check, solve_jacobi
from geonet.solver import (
    BalancedResult,
    SolverConfig,
    descent_balanced,
    find_y_x,
    sweep_balanced,
    trace_s_curve,
    verify_balanced,
)

__all__ = [
    "BalancedResult",
    "GeodesicPath",
    "JacobiScalar",
    "SolverConfig",
    "Surface",
    "SurfacePoint",
    "TangentVector",
    "Triangle",
    "angle_between_vectors",
    "build_triangle",
    "check_preconditions",
    "christoffel_at",
    "connect",
    "curvature_at",
    "descent_balanced",
    "distance",
    "find_y_x",
    "first_conjugate_point",
    "gauss_bonnet_residual",
    "index_form",
    "make_surface",
    "metric_at",
    "monotone_window_check",
    "shoot",
    "solve_jacobi",
    "sweep_balanced",
    "trace_s_curve",
    "verify_balanced",
]
