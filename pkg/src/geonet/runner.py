"""Scenario execution shared by the command line and the verification suites."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import replace

from geonet import __version__
from geonet.geodesics import GeodesicError, NonUniqueGeodesicError
from geonet.scenario import Scenario
from geonet.solver import (
    PreconditionError,
    SolverError,
    angle_profile,
    descent_balanced,
    sweep_balanced,
    trace_s_curve,
    verify_balanced,
)
from geonet.surfaces import DomainError
from geonet.triangle import TriangleError, build_triangle, check_preconditions, gauss_bonnet_residual

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REFUSED = 2
EXIT_NOT_CONVERGED = 3

TRACE_COLUMNS = ("x_param", "Y_u", "Y_v", "angle_AYB", "angle_BYC", "angle_CYA")
PROFILE_COLUMNS = ("fraction", "Y_u", "Y_v", "angle_BYC")


def _header(sc: Scenario) -> dict:
    return {"tool": "geonet", "version": __version__, "scenario": sc.name, "scenario_hash": sc.hash,
            "seed": sc.seed}


def _triangle_summary(t) -> dict:
    return {
        "vertices": [[p.u, p.v] for p in t.vertices],
        "angles": list(t.angles),
        "side_lengths": list(t.side_lengths),
        "orientation": t.orientation,
        "degenerate": t.degenerate,
        "sides_disjoint": t.sides_disjoint,
    }


def run_scenario(sc: Scenario, *, method: str | None = None, override: bool | None = None,
                 timing: bool = False) -> tuple[dict, int]:
    """Solve a scenario; returns the result record and the exit code.

    Exit codes: 0 every requested method converged, 2 the triangle was
    refused (failed hypotheses or a non-unique side), 3 a solver did not
    converge.
    """
    t0 = time.perf_counter()
    method = method or sc.method
    cfg = sc.config if override is None else replace(sc.config, override=override or sc.config.override)
    record = _header(sc)
    record["method"] = method

    try:
        tri = build_triangle(sc.surface, *sc.vertices, tol=cfg.bvp_tol)
    except NonUniqueGeodesicError as exc:
        record.update(status="refused", reason=str(exc),
                      non_unique={"lengths": [r.length for r in exc.solutions],
                                  "angles": [r.alpha for r in exc.solutions]})
        return _finish(record, t0, timing), EXIT_REFUSED
    except GeodesicError as exc:
        record.update(status="not-converged", reason=f"triangle sides: {exc}")
        return _finish(record, t0, timing), EXIT_NOT_CONVERGED
    except (TriangleError, DomainError) as exc:
        record.update(status="input-error", reason=str(exc))
        return _finish(record, t0, timing), EXIT_INPUT

    record["triangle"] = _triangle_summary(tri)
    log.debug("%s: sides %s, angles %s", sc.name, tri.side_lengths, tri.angles)
    report = check_preconditions(tri, sc.sampling.diameter_samples)
    log.info("%s: precondition verdict %s (diameter estimate %.6g)", sc.name, report.verdict,
             report.diameter_estimate)
    record["preconditions"] = report.to_dict()
    if tri.degenerate:
        record["gauss_bonnet_residual"] = None
    else:
        record["gauss_bonnet_residual"] = gauss_bonnet_residual(tri, sc.sampling.quadrature_resolution)

    if report.verdict == "fail" and not cfg.override:
        record.update(status="refused", reason="triangle fails the existence hypotheses")
        return _finish(record, t0, timing), EXIT_REFUSED
    record["advisory"] = report.verdict != "pass"

    methods = ["sweep", "descent"] if method == "both" else [method]
    results, verification = {}, {}
    ok = True
    sweep_point = None
    for m in methods:
        try:
            if m == "sweep":
                res = sweep_balanced(tri, cfg, report=report)
                sweep_point = res.point if res.converged else None
            else:
                res = descent_balanced(tri, sc.start, cfg, report=report, sweep_seed=sweep_point)
        except (SolverError, GeodesicError, TriangleError, DomainError) as exc:
            results[m] = {"error": f"{type(exc).__name__}: {exc}"}
            ok = False
            continue
        results[m] = res.to_dict()
        log.info("%s: %s %s after %d iterations", sc.name, m,
                 "converged" if res.converged else "did not converge", res.iterations)
        ok &= res.converged
        if res.converged:
            try:
                verification[m] = verify_balanced(tri, res.point, cfg).to_dict()
            except (SolverError, GeodesicError) as exc:
                verification[m] = {"error": str(exc)}
    record["results"] = results
    record["verification"] = verification
    if len(methods) == 2 and all(results[m].get("converged") for m in methods):
        a, b = results["sweep"]["point"], results["descent"]["point"]
        record["method_agreement"] = math.hypot(a[0] - b[0], a[1] - b[1])
    record["status"] = "converged" if ok else "not-converged"
    return _finish(record, t0, timing), EXIT_OK if ok else EXIT_NOT_CONVERGED


def _finish(record: dict, t0: float, timing: bool) -> dict:
    if timing:
        record["timing_seconds"] = time.perf_counter() - t0
    return record


def trace_rows(sc: Scenario, n: int | None = None):
    """Header fields and trace records of the Y_X curve."""
    tri = build_triangle(sc.surface, *sc.vertices, tol=sc.config.bvp_tol)
    trace = trace_s_curve(tri, n or sc.sampling.trace_n, sc.config)
    rows = []
    for r in trace.records:
        if r.point is None:
            log.warning("trace record at x = %.6g failed: %s", r.x_param, r.error)
            rows.append({"x_param": r.x_param, "error": r.error})
            continue
        rows.append({"x_param": r.x_param, "Y_u": r.point.u, "Y_v": r.point.v, "angle_AYB": r.angles[0],
                     "angle_BYC": r.angles[1], "angle_CYA": r.angles[2], "tangential": r.tangential})
    return _header(sc), rows


def profile_rows(sc: Scenario, x_param: float | None = None, n: int | None = None):
    """Header fields and samples of angle BYC along the geodesic A -> X."""
    tri = build_triangle(sc.surface, *sc.vertices, tol=sc.config.bvp_tol)
    x = sc.sampling.profile_x if x_param is None else x_param
    prof = angle_profile(tri, x, n or sc.sampling.profile_n, sc.config)
    rows = [{"fraction": float(f), "Y_u": p.u, "Y_v": p.v, "angle_BYC": float(a)}
            for f, p, a in zip(prof.fractions, prof.points, prof.angles)]
    head = _header(sc)
    head.update(x_param=x, increasing=prof.increasing)
    return head, rows
