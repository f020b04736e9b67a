"""Command line front end: ``geonet solve|trace|profile|verify|surfaces``.

Exit codes: 0 success, 1 input error, 2 precondition refusal,
3 non-convergence (or a failed verification suite).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from geonet import __version__
from geonet.geodesics import GeodesicError, NonUniqueGeodesicError
from geonet.runner import (
    EXIT_INPUT,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_REFUSED,
    PROFILE_COLUMNS,
    TRACE_COLUMNS,
    profile_rows,
    run_scenario,
    trace_rows,
)
from geonet.scenario import ScenarioError, dump_json, load_scenario
from geonet.solver import SolverError
from geonet.surfaces import KINDS, DomainError
from geonet.triangle import TriangleError

log = logging.getLogger("geonet")

SURFACE_HELP = {
    "plane": {"params": {}, "curvature": "K = 0"},
    "sphere": {"params": {"R": 1.0, "theta_min": 1e-3}, "curvature": "K = 1/R^2",
               "chart": "u = polar angle in (theta_min, pi - theta_min), v = azimuth (period 2 pi)"},
    "sphere-stereo": {"params": {"R": 1.0, "chart_radius": "50 R"}, "curvature": "K = 1/R^2",
                      "chart": "stereographic from the south pole; equator is |(u, v)| = R, north pole is the origin"},
    "hyperbolic-disk": {"params": {"a": 1.0}, "curvature": "K = -1/a^2",
                        "chart": "Poincare unit disk, metric 4 a^2 |dx|^2 / (1 - |x|^2)^2"},
    "ellipsoid": {"params": {"a": 1.0, "c": "required", "theta_min": 1e-3},
                  "curvature": "K = c^2 / (a^2 cos^2 u + c^2 sin^2 u)^2, bounded by c^2 / min(a, c)^4",
                  "chart": "spheroid (a, a, c) in polar/azimuth coordinates"},
    "user": {"params": {"g11": "expr", "g12": "expr", "g22": "expr", "domain": "{u: [lo, hi], v: [lo, hi]} or {disk: [cu, cv, r]}",
                        "v_period": 0.0},
             "curvature": "Brioschi formula with central differences",
             "chart": "expressions in u, v using + - * / ^ sin cos sinh cosh exp sqrt pi e"},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _setup_logging():
    level = os.environ.get("GEONET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(columns, rows, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def _load(args):
    sc = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    if getattr(args, "override_preconditions", False):
        sc = replace(sc, config=replace(sc.config, override=True))
    return sc


def cmd_solve(args) -> int:
    sc = _load(args)
    record, code = run_scenario(sc, method=args.method, timing=args.timing)
    if args.format == "csv":
        cols = ("method", "converged", "Y_u", "Y_v", "angle_AYB", "angle_BYC", "angle_CYA",
                "tangent_sum_norm", "iterations")
        rows = []
        for m, r in record.get("results", {}).items():
            if "error" in r:
                continue
            rows.append({"method": m, "converged": r["converged"], "Y_u": r["point"][0], "Y_v": r["point"][1],
                         "angle_AYB": r["angles"][0], "angle_BYC": r["angles"][1], "angle_CYA": r["angles"][2],
                         "tangent_sum_norm": r["tangent_sum_norm"], "iterations": r["iterations"]})
        text = _csv(cols, rows, f"geonet {__version__} scenario_hash={sc.hash} status={record['status']}")
    else:
        text = dump_json(record)
    _emit(text, args.out)
    if code != EXIT_OK:
        print(f"geonet: {record['status']}: {record.get('reason', 'see output')}", file=sys.stderr)
    return code


def cmd_trace(args) -> int:
    sc = _load(args)
    head, rows = trace_rows(sc, args.n)
    if args.format == "json":
        text = dump_json({**head, "records": rows})
    else:
        ok_rows = [r for r in rows if "error" not in r]
        text = _csv(TRACE_COLUMNS, ok_rows, f"geonet {head['version']} scenario_hash={head['scenario_hash']}")
    _emit(text, args.out)
    return EXIT_OK if all("error" not in r for r in rows) else EXIT_NOT_CONVERGED


def cmd_profile(args) -> int:
    sc = _load(args)
    head, rows = profile_rows(sc, args.x, args.n)
    if args.format == "json":
        text = dump_json({**head, "samples": rows})
    else:
        text = _csv(PROFILE_COLUMNS, rows,
                    f"geonet {head['version']} scenario_hash={head['scenario_hash']} x_param={head['x_param']!r}")
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from geonet.suites import SUITES, suite_scenarios

    wanted = [f for item in (args.filter or []) for f in item.split(",") if f]
    unknown = [f for f in wanted if f not in SUITES and f != "scenarios"]
    if unknown:
        raise ScenarioError(f"unknown suite(s): {', '.join(unknown)}; available: "
                            f"{', '.join([*SUITES, 'scenarios'])}")
    seed = 0 if args.seed is None else args.seed
    if wanted:
        names = [n for n in SUITES if n in wanted]
    else:
        names = [] if args.scenario else list(SUITES)
    results = [SUITES[n](seed) for n in names]
    if args.scenario and (not wanted or "scenarios" in wanted):
        path = Path(args.scenario)
        if not path.exists():
            raise ScenarioError(f"{path}: no such file or directory")
        if path.is_dir():
            results.append(suite_scenarios(path, args.seed))
        else:
            tmp = suite_scenarios(path.parent, args.seed)
            tmp.cases = [c for c in tmp.cases if c.name == load_scenario(path).name]
            results.append(tmp)
    ok = all(r.ok for r in results)
    if args.format == "csv":
        rows = [{"suite": r.name, "passed": r.passed, "total": r.total, "ok": r.ok} for r in results]
        text = _csv(("suite", "passed", "total", "ok"), rows, f"geonet {__version__} seed={seed}")
    else:
        text = dump_json({"tool": "geonet", "version": __version__, "seed": seed, "ok": ok,
                          "suites": [r.to_dict() for r in results]})
    _emit(text, args.out)
    for r in results:
        print(f"{r.name}: {r.passed}/{r.total} {'PASS' if r.ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_surfaces(args) -> int:
    if args.format == "csv":
        rows = [{"kind": k, "params": " ".join(SURFACE_HELP[k]["params"]), "curvature": SURFACE_HELP[k]["curvature"]}
                for k in KINDS]
        text = _csv(("kind", "params", "curvature"), rows)
    else:
        text = dump_json({k: SURFACE_HELP[k] for k in KINDS})
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geonet", description="Balanced vertices of geodesic triangles on surfaces.")
    p.add_argument("--version", action="version", version=f"geonet {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt_default="json", scenario_required=True):
        sp.add_argument("--scenario", required=scenario_required, help="scenario JSON file")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default=fmt_default)
        sp.add_argument("--seed", type=int, help="override the scenario seed")

    s = sub.add_parser("solve", help="compute the balanced vertex of a scenario")
    common(s)
    s.add_argument("--method", choices=("sweep", "descent", "both"))
    s.add_argument("--override-preconditions", action="store_true",
                   help="attempt a solve even when the existence hypotheses fail")
    s.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte-identical output)")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("trace", help="emit the Y_X sweep curve")
    common(t, "csv")
    t.add_argument("--n", type=int, help="number of records (default from the scenario)")
    t.set_defaults(func=cmd_trace)

    pr = sub.add_parser("profile", help="emit angle BYC along the geodesic from A to X")
    common(pr, "csv")
    pr.add_argument("--x", type=float, help="position of X on side BC in (0, 1)")
    pr.add_argument("--n", type=int, help="number of samples")
    pr.set_defaults(func=cmd_profile)

    v = sub.add_parser("verify", help="run verification suites and/or a directory of scenarios")
    common(v, scenario_required=False)
    v.add_argument("--filter", action="append", help="suite name (repeatable or comma separated)")
    v.set_defaults(func=cmd_verify)

    su = sub.add_parser("surfaces", help="list the surface families and their parameters")
    su.add_argument("--format", choices=("json", "csv"), default="json")
    su.add_argument("--out")
    su.set_defaults(func=cmd_surfaces)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"geonet: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (TriangleError, DomainError, ValueError) as exc:
        print(f"geonet: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NonUniqueGeodesicError as exc:
        print(f"geonet: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except (SolverError, GeodesicError) as exc:
        print(f"geonet: not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except OSError as exc:
        print(f"geonet: I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
