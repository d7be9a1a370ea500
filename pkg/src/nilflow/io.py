"""File formats.

Algebras and metrics are JSON. Algebra documents list brackets with 1-based
indices, ``{"dim": 3, "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}]}``, or
name a generator, ``{"family": "heisenberg", "n": 2}``. Metric documents are
``{"diag": [...]}`` or ``{"mat": [[...], ...]}``. Trajectories are CSV with
header ``t, g_<label>, ...`` or JSON.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .algebra import LieAlgebraSpec, abelian, heisenberg, unitriangular
from .errors import StructureError
from .metric import MetricState

__all__ = [
    "OUTPUT_DIR_ENV",
    "resolve_output",
    "to_jsonable",
    "dumps",
    "write_json",
    "read_json",
    "load_algebra",
    "save_algebra",
    "load_metric",
    "save_metric",
    "write_trajectory",
    "read_trajectory_csv",
]

OUTPUT_DIR_ENV = "NILFLOW_OUTPUT_DIR"

GENERATORS = {"heisenberg": heisenberg, "unitriangular": unitriangular, "abelian": abelian}


def resolve_output(path) -> Path:
    """Relative output paths land in ``$NILFLOW_OUTPUT_DIR`` when it is set."""
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> Path:
    p = resolve_output(path)
    p.write_text(dumps(obj))
    return p


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise StructureError(f"{path}: not valid JSON ({exc})") from None


def load_algebra(path) -> LieAlgebraSpec:
    data = read_json(path)
    if not isinstance(data, dict):
        raise StructureError(f"{path}: algebra document must be a JSON object")
    if "family" in data:
        try:
            gen = GENERATORS[data["family"]]
        except KeyError:
            raise StructureError(f"{path}: unknown family {data['family']!r}") from None
        return gen(data.get("n", data.get("dim")))
    return LieAlgebraSpec.from_dict(data)


def save_algebra(spec: LieAlgebraSpec, path) -> Path:
    return write_json(spec.to_dict(), path)


def load_metric(path) -> MetricState:
    data = read_json(path)
    if isinstance(data, list):
        arr = np.asarray(data, dtype=float)
        return MetricState.diagonal(arr) if arr.ndim == 1 else MetricState.full(arr)
    if not isinstance(data, dict):
        raise StructureError(f"{path}: metric document must be a JSON object or array")
    return MetricState.from_dict(data)


def save_metric(g: MetricState, path) -> Path:
    return write_json(g.to_dict(), path)


def write_trajectory(trajectory, path) -> Path:
    """CSV or JSON depending on the suffix."""
    p = resolve_output(path)
    if p.suffix.lower() == ".json":
        p.write_text(dumps(trajectory.to_dict()))
    elif p.suffix.lower() == ".csv":
        trajectory.to_csv(p)
    else:
        raise StructureError(f"trajectory output must end in .csv or .json, got {p.name!r}")
    return p


def read_trajectory_csv(path) -> tuple:
    """``(header, times, values)`` from a trajectory CSV."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data[:, 0], data[:, 1:]
