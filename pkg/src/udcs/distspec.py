"""JSON distribution specs for the command line.

A spec names a built-in family::

    {"family": "gaussian1d"}
    {"family": "shifted_exponential", "params": {"a": 3}}
    {"family": "bell_unit", "params": {"theta": 0.25}}
    {"family": "bell_cosine", "params": {"theta": 0.7, "y_A": -1}}
    {"family": "uniform_region",
     "region": {"shape": "ellipsoid",
                "params": {"K": [[1.3333, -0.6667], [-0.6667, 1.3333]]}}}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .densities import (
    Density,
    builtin_bell_cosine,
    builtin_bell_unit,
    builtin_gaussian1d,
    builtin_shifted_exponential,
    builtin_uniform_on,
)
from .regions import Box, Ellipsoid, Region, RegionError

__all__ = ["SpecError", "DistributionSpec", "parse_spec", "load_spec", "FAMILIES"]

FAMILIES = {
    "uniform_region": (),
    "gaussian1d": (),
    "shifted_exponential": ("a",),
    "bell_unit": ("theta",),
    "bell_cosine": ("theta", "y_A"),
}
SHAPES = {"box": ("lower", "upper"), "ellipsoid": ("K",)}


class SpecError(ValueError):
    """Malformed spec; ``where`` is a field path or a ``line:col`` location."""

    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


def _number(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SpecError(where, f"expected a finite number, got {v!r}")
    return float(v)


def _vector(v, where):
    if not isinstance(v, list) or not v:
        raise SpecError(where, "expected a non-empty list of numbers")
    return [_number(a, f"{where}[{i}]") for i, a in enumerate(v)]


def _matrix(v, where):
    if not isinstance(v, list) or not v:
        raise SpecError(where, "expected a non-empty list of rows")
    rows = [_vector(r, f"{where}[{i}]") for i, r in enumerate(v)]
    if any(len(r) != len(rows) for r in rows):
        raise SpecError(where, "matrix must be square")
    return rows


@dataclass
class DistributionSpec:
    family: str
    params: dict = field(default_factory=dict)
    region: dict | None = None

    def to_dict(self):
        d = {"family": self.family, "params": dict(self.params)}
        if self.region is not None:
            d["region"] = {"shape": self.region["shape"],
                           "params": dict(self.region["params"])}
        return d

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def build_region(self) -> Region:
        if self.region is None:
            raise SpecError("region", "missing")
        p = self.region["params"]
        try:
            if self.region["shape"] == "box":
                return Box(p["lower"], p["upper"])
            return Ellipsoid(p["K"], p.get("center"))
        except (RegionError, ValueError, np.linalg.LinAlgError) as e:
            raise SpecError("region.params", str(e)) from None

    def build(self) -> Density:
        p = self.params
        try:
            if self.family == "gaussian1d":
                return builtin_gaussian1d()
            if self.family == "shifted_exponential":
                return builtin_shifted_exponential(p["a"])
            if self.family == "bell_unit":
                return builtin_bell_unit(p["theta"])
            if self.family == "bell_cosine":
                return builtin_bell_cosine(p["theta"], int(p["y_A"]))
            return builtin_uniform_on(self.build_region())
        except SpecError:
            raise
        except (RegionError, ValueError) as e:
            raise SpecError("params", str(e)) from None


def _parse_region(r):
    if not isinstance(r, dict):
        raise SpecError("region", "expected an object")
    shape = r.get("shape")
    if shape not in SHAPES:
        raise SpecError("region.shape", f"expected one of {sorted(SHAPES)}, got {shape!r}")
    p = r.get("params")
    if not isinstance(p, dict):
        raise SpecError("region.params", "expected an object")
    for key in SHAPES[shape]:
        if key not in p:
            raise SpecError(f"region.params.{key}", "missing")
    extra = set(p) - set(SHAPES[shape]) - ({"center"} if shape == "ellipsoid" else set())
    if extra:
        raise SpecError(f"region.params.{sorted(extra)[0]}", "unknown field")
    out = {}
    if shape == "box":
        out["lower"] = _vector(p["lower"], "region.params.lower")
        out["upper"] = _vector(p["upper"], "region.params.upper")
        if len(out["lower"]) != len(out["upper"]):
            raise SpecError("region.params.upper", "length differs from lower")
    else:
        out["K"] = _matrix(p["K"], "region.params.K")
        if "center" in p:
            out["center"] = _vector(p["center"], "region.params.center")
            if len(out["center"]) != len(out["K"]):
                raise SpecError("region.params.center", "length differs from K")
    return {"shape": shape, "params": out}


def parse_spec(obj) -> DistributionSpec:
    """Validate a decoded JSON object (or JSON text) into a spec."""
    if isinstance(obj, (str, bytes)):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as e:
            raise SpecError(f"line {e.lineno} col {e.colno}", e.msg) from None
    if not isinstance(obj, dict):
        raise SpecError("$", "expected a JSON object")
    extra = set(obj) - {"family", "params", "region"}
    if extra:
        raise SpecError(sorted(extra)[0], "unknown field")
    fam = obj.get("family")
    if fam not in FAMILIES:
        raise SpecError("family", f"expected one of {sorted(FAMILIES)}, got {fam!r}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise SpecError("params", "expected an object")
    for key in FAMILIES[fam]:
        if key not in params:
            raise SpecError(f"params.{key}", "missing")
    for key in params:
        if key not in FAMILIES[fam]:
            raise SpecError(f"params.{key}", "unknown field")
    params = {k: _number(v, f"params.{k}") for k, v in params.items()}
    if fam == "bell_cosine" and params["y_A"] not in (1.0, -1.0):
        raise SpecError("params.y_A", "must be +1 or -1")
    if fam == "shifted_exponential" and params["a"] < 0:
        raise SpecError("params.a", "must be >= 0")
    region = None
    if fam == "uniform_region":
        if "region" not in obj:
            raise SpecError("region", "missing (required for uniform_region)")
        region = _parse_region(obj["region"])
    elif "region" in obj:
        raise SpecError("region", f"not allowed for family {fam}")
    return DistributionSpec(fam, params, region)


def load_spec(path) -> DistributionSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
