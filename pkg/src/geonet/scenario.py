"""Scenario documents: JSON loading, schema validation and object construction."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from geonet.expr import ExpressionError, compile_expression
from geonet.solver import SolverConfig
from geonet.surfaces import Surface, SurfacePoint, make_surface


class ScenarioError(ValueError):
    """The scenario file is unreadable, malformed or inconsistent."""


def load_schema() -> dict:
    text = resources.files("geonet").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class Sampling:
    trace_n: int = 11
    profile_n: int = 17
    profile_x: float = 0.5
    diameter_samples: int = 24
    quadrature_resolution: int = 256


@dataclass
class Scenario:
    name: str
    document: dict
    surface: Surface
    vertices: tuple[SurfacePoint, SurfacePoint, SurfacePoint]
    method: str
    config: SolverConfig
    sampling: Sampling
    seed: int
    start: SurfacePoint | None = None
    expect: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return scenario_hash(self.document)


def scenario_hash(document: dict) -> str:
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    canon = json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _number(x, where: str) -> float:
    if isinstance(x, (int, float)):
        return float(x)
    try:
        prog = compile_expression(x)
    except ExpressionError as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    if any(op in (1, 2) for op in prog.ops):
        raise ScenarioError(f"{where}: coordinates may not refer to u or v")
    return float(prog(0.0, 0.0))


def parse_point(xs, where: str) -> SurfacePoint:
    return SurfacePoint(_number(xs[0], f"{where}[0]"), _number(xs[1], f"{where}[1]"))


def parse_document(text: str, source: str = "<scenario>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            path = "/".join(str(p) for p in e.absolute_path) or "(root)"
            lines.append(f"{source}: field {path}: {e.message}")
        raise ScenarioError("\n".join(lines))
    return doc


def from_document(doc: dict, source: str = "<scenario>") -> Scenario:
    surf_doc = doc["surface"]
    try:
        surface = make_surface(surf_doc["kind"], surf_doc.get("params", {}),
                               curvature_upper_bound=surf_doc.get("curvature_upper_bound"))
    except ValueError as exc:
        raise ScenarioError(f"{source}: field surface: {exc}") from None
    verts = tuple(parse_point(doc["vertices"][k], f"vertices/{k}") for k in ("A", "B", "C"))
    for tag, p in zip("ABC", verts):
        if not surface.contains(p):
            raise ScenarioError(f"{source}: field vertices/{tag}: ({p.u:.6g}, {p.v:.6g}) is outside the chart domain")
    sol = doc.get("solver", {})
    smp = doc.get("sampling", {})
    sampling = Sampling(**smp)
    config = SolverConfig(
        angle_tol=sol.get("angle_tol", 1e-7),
        vec_tol=sol.get("vec_tol", 2e-7),
        bvp_tol=sol.get("bvp_tol", 1e-9),
        max_iter=sol.get("max_iter", 200),
        override=sol.get("override", False),
        diameter_samples=sampling.diameter_samples,
    )
    start = parse_point(sol["start"], "solver/start") if "start" in sol else None
    name = doc.get("name") or Path(source).stem
    return Scenario(name, doc, surface, verts, sol.get("method", "both"), config, sampling,
                    int(doc.get("seed", 0)), start, doc.get("expect", {}))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror or exc}") from None
    return from_document(parse_document(text, str(path)), str(path))


def dump_json(obj: Any) -> str:
    """Deterministic JSON used for every machine-readable output."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, SurfacePoint):
        return [o.u, o.v]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
