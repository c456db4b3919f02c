"""JSON schemas, instance/section loading and byte-stable report encoding."""

from __future__ import annotations

import dataclasses
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .errors import InstanceError
from .fibration import Fibration, Section
from .linear import LinearFibration, LinearSection
from .metric import FiniteMetricSpace, NormedInstance, _freeze, grid_linf

_NUM = {"type": ["number", "string"]}

INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["metric"],
    "properties": {
        "points": {"type": "array"},
        "exact": {"type": "boolean"},
        "trusted": {"type": "boolean"},
        "metric": {
            "type": "object",
            "required": ["kind"],
            "oneOf": [
                {
                    "properties": {
                        "kind": {"const": "matrix"},
                        "dist": {"type": "array", "items": {"type": "array", "items": _NUM}},
                    },
                    "required": ["dist"],
                },
                {
                    "properties": {
                        "kind": {"const": "grid_linf"},
                        "rows": {"type": "integer", "minimum": 1},
                        "cols": {"type": "integer", "minimum": 1},
                    },
                    "required": ["rows", "cols"],
                },
                {
                    "properties": {
                        "kind": {"const": "normed"},
                        "norm": {"enum": ["l1", "l2", "linf"]},
                        "vectors": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                    },
                    "required": ["norm", "vectors"],
                },
            ],
        },
        "fibration": {
            "type": "object",
            "required": ["fiber_of"],
            "properties": {
                "labels": {"type": "array"},
                "fiber_of": {"type": ["object", "array"]},
                "measure": {"type": ["object", "array"]},
            },
        },
    },
}

SECTION_SCHEMA = {
    "type": "object",
    "required": ["choice"],
    "properties": {"choice": {"type": ["object", "array"]}},
}

LINEAR_SCHEMA = {
    "type": "object",
    "required": ["A", "y_grid"],
    "properties": {
        "A": {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"type": "number"}}},
        "norm": {"enum": ["l1", "l2", "linf"]},
        "y_grid": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "scale": {"type": "number"},
        "fiber_radius": {"type": ["number", "null"]},
    },
}

LINEAR_SECTION_SCHEMA = {
    "type": "object",
    "properties": {
        "values": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "choice": {"type": "object"},
        "scale": {"type": "number"},
    },
    "anyOf": [{"required": ["values"]}, {"required": ["choice"]}],
}


class SchemaError(InstanceError):
    """Input JSON does not match its schema; the message carries the JSON path."""


def validate_schema(doc: Any, schema: dict, where: str = "") -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaError(f"{where}{err.json_path}: {err.message}")


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"{path}: {exc}") from None


# Encoding.


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else float(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if v == float("inf"):
            return "inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_json"):
            return to_jsonable(obj.to_json())
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {key_of(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted((to_jsonable(v) for v in obj), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__} as JSON")


def key_of(obj: Any) -> str:
    """Canonical JSON object key for a point or label identifier."""
    if isinstance(obj, str):
        return obj
    return json.dumps(to_jsonable(obj), separators=(",", ":"))


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


# Decoding.


def _resolve(key: Any, known: dict, what: str):
    """Map a JSON key (string) or value back to a known identifier."""
    if not isinstance(key, str):
        frozen = _freeze(key)
        if frozen in known:
            return frozen
        raise InstanceError(f"unknown {what} {key!r}")
    if key in known:
        return key
    try:
        frozen = _freeze(json.loads(key))
    except json.JSONDecodeError:
        raise InstanceError(f"unknown {what} {key!r}") from None
    if frozen in known:
        return frozen
    raise InstanceError(f"unknown {what} {key!r}")


def _items(obj) -> list:
    return list(obj.items()) if isinstance(obj, dict) else [tuple(pair) for pair in obj]


def space_from_json(doc: dict) -> FiniteMetricSpace:
    validate_schema(doc, INSTANCE_SCHEMA, "instance")
    metric = doc["metric"]
    kind = metric["kind"]
    exact = doc.get("exact", False)
    trusted = doc.get("trusted", False)
    if kind == "grid_linf":
        space = grid_linf(metric["rows"], metric["cols"])
        if "points" in doc and [_freeze(p) for p in doc["points"]] != list(space.points):
            raise SchemaError("instance$.points: does not match the generated grid points")
        return space
    if kind == "normed":
        inst = NormedInstance(metric["vectors"], metric["norm"])
        return inst.to_metric_space(doc.get("points"), trusted=trusted)
    points = doc.get("points")
    if points is None:
        raise SchemaError("instance$.points: required for matrix metrics")
    return FiniteMetricSpace(points, metric["dist"], exact=exact, trusted=trusted)


def fibration_from_json(doc: dict, space: FiniteMetricSpace | None = None) -> Fibration:
    if space is None:
        space = space_from_json(doc)
    fdoc = doc.get("fibration")
    if fdoc is None:
        if doc["metric"]["kind"] != "grid_linf":
            raise SchemaError("instance$.fibration: required for non-grid metrics")
        fdoc = {"fiber_of": [[p, p[0]] for p in space.points]}
    known_points = {p: p for p in space.points}
    fiber_of = {_resolve(k, known_points, "point"): _freeze(v) for k, v in _items(fdoc["fiber_of"])}
    labels = [_freeze(y) for y in fdoc["labels"]] if "labels" in fdoc else None
    fib = Fibration(space, fiber_of, labels)
    if "measure" in fdoc:
        known_labels = {y: y for y in fib.labels}
        measure = {_resolve(k, known_labels, "label"): w for k, w in _items(fdoc["measure"])}
        fib = Fibration(space, fiber_of, fib.labels, measure)
    return fib


def section_from_json(doc: dict, fibration: Fibration) -> Section:
    validate_schema(doc, SECTION_SCHEMA, "section")
    known_labels = {y: y for y in fibration.labels}
    known_points = {p: p for p in fibration.space.points}
    choice = {}
    for k, v in _items(doc["choice"]):
        choice[_resolve(k, known_labels, "label")] = _resolve(v, known_points, "point")
    return Section(fibration, choice)


def _lossless(v):
    if isinstance(v, Fraction) and v.denominator != 1:
        return f"{v.numerator}/{v.denominator}"
    return v


def fibration_to_json(fib: Fibration) -> dict:
    """Explicit-matrix instance document; exact entries survive as ``"p/q"`` strings."""
    space = fib.space
    dist = [[_lossless(v) for v in row] for row in space.dist.tolist()]
    doc = {
        "points": list(space.points),
        "exact": space.exact,
        "metric": {"kind": "matrix", "dist": dist},
        "fibration": {
            "labels": list(fib.labels),
            "fiber_of": {key_of(p): y for p, y in fib.fiber_map().items()},
        },
    }
    if fib.measure is not None:
        doc["fibration"]["measure"] = {key_of(y): _lossless(w) for y, w in zip(fib.labels, fib.measure)}
    return to_jsonable(doc)


def section_to_json(phi: Section) -> dict:
    return to_jsonable({"choice": {key_of(y): p for y, p in phi.choice.items()}})


def linear_from_json(doc: dict) -> LinearFibration:
    validate_schema(doc, LINEAR_SCHEMA, "linear instance")
    return LinearFibration(
        doc["A"],
        doc.get("norm", "l2"),
        doc["y_grid"],
        doc.get("scale", 1.0),
        doc.get("fiber_radius"),
    )


def linear_to_json(fib: LinearFibration) -> dict:
    return to_jsonable(
        {
            "A": fib.A,
            "norm": fib.norm_kind,
            "y_grid": fib.y_grid,
            "scale": fib.scale,
            "fiber_radius": fib.fiber_radius,
        }
    )


def linear_section_from_json(doc: dict, fib: LinearFibration) -> LinearSection:
    validate_schema(doc, LINEAR_SECTION_SCHEMA, "linear section")
    if "scale" in doc and doc["scale"] != fib.scale:
        fib = fib.rescaled(doc["scale"] / fib.scale)
    if "values" in doc:
        values = doc["values"]
    else:
        values = [None] * len(fib.y_grid)
        for k, v in doc["choice"].items():
            idx = int(k)
            if not 0 <= idx < len(values):
                raise SchemaError(f"linear section$.choice.{k}: grid index out of range")
            values[idx] = v
        if any(v is None for v in values):
            raise SchemaError("linear section$.choice: missing grid indices")
    return LinearSection(fib, values)


def linear_section_to_json(phi: LinearSection) -> dict:
    return to_jsonable({"values": phi.values, "scale": phi.scale})
