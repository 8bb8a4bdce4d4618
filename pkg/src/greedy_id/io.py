"""JSON problem/result formats.

Matrices are row-major nested lists, complex numbers are ``[re, im]`` pairs and
controls are ``{"t_final", "n_steps", "values"}`` with ``values`` shaped
``(channels, n_steps)``. Every document carries a ``"kind"`` tag and is
validated against the schemas below on load.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .greedy import FittingSolution, GreedyResult
from .lin_system import Control, LinearSystem, TimeGrid
from .quantum.system import QuantumSystem

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}
_MAT = {"type": "array", "items": _VEC}
_CPLX = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_CVEC = {"type": "array", "items": _CPLX}
_GRID = {
    "type": "object",
    "properties": {"t_final": {"type": "number", "exclusiveMinimum": 0},
                   "n_steps": {"type": "integer", "minimum": 1}},
    "required": ["t_final", "n_steps"],
}
CONTROL_SCHEMA = {
    "type": "object",
    "properties": {**_GRID["properties"], "values": _MAT},
    "required": ["t_final", "n_steps", "values"],
}
LINEAR_PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "linear"},
        "A": _MAT, "C": _MAT,
        "candidates": {"type": "array", "items": _MAT, "minItems": 1},
        "phi0": _VEC,
        "grid": _GRID,
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "B_true": _MAT,
    },
    "required": ["kind", "A", "C", "candidates", "grid"],
}
QUANTUM_PROBLEM_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "quantum"},
        "H": _MAT,
        "candidates": {"type": "array", "items": _MAT, "minItems": 1},
        "psi0": _CVEC, "psi1": _CVEC,
        "grid": _GRID,
        "mu_true": _MAT,
    },
    "required": ["kind", "H", "candidates", "psi0", "psi1", "grid"],
}
RESULT_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "greedy_result"},
        "selected": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "controls": {"type": "array", "items": CONTROL_SCHEMA},
        "discriminatory_values": _VEC,
        "fitting": {"type": "array", "items": {
            "type": "object",
            "properties": {"alpha": _VEC, "residual": _NUM, "unique": {"type": "boolean"}},
            "required": ["alpha", "residual"],
        }},
        "stop_reason": {"type": "string"},
    },
    "required": ["kind", "selected", "controls", "discriminatory_values", "stop_reason"],
}
MEASUREMENTS_SCHEMA = {
    "type": "object",
    "properties": {"kind": {"const": "measurements"},
                   "outputs": {"type": "array", "items": {"type": "array"}}},
    "required": ["kind", "outputs"],
}


class FormatError(ValueError):
    """Document does not match its schema."""


def _validate(doc, schema):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise FormatError(exc.message) from exc


def complex_to_json(z) -> Any:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def complex_from_json(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def control_to_json(eps: Control) -> dict:
    return {"t_final": eps.grid.t_final, "n_steps": eps.grid.n_steps, "values": eps.values.tolist()}


def control_from_json(doc) -> Control:
    _validate(doc, CONTROL_SCHEMA)
    return Control(TimeGrid(doc["t_final"], doc["n_steps"]), np.asarray(doc["values"], dtype=float))


def _grid(doc) -> TimeGrid:
    return TimeGrid(float(doc["t_final"]), int(doc["n_steps"]))


def linear_problem_from_json(doc) -> LinearSystem:
    _validate(doc, LINEAR_PROBLEM_SCHEMA)
    A = np.asarray(doc["A"], dtype=float)
    phi0 = doc.get("phi0", [0.0] * len(A))
    return LinearSystem(A, np.asarray(doc["C"], dtype=float), np.asarray(doc["candidates"], dtype=float),
                        np.asarray(phi0, dtype=float), _grid(doc["grid"]), check_distinct=False)


def linear_problem_to_json(sys: LinearSystem, **extra) -> dict:
    doc = {"kind": "linear", "A": sys.A.tolist(), "C": sys.C.tolist(),
           "candidates": sys.candidates.tolist(), "phi0": sys.phi0.tolist(),
           "grid": {"t_final": sys.grid.t_final, "n_steps": sys.grid.n_steps}}
    doc.update({k: np.asarray(v).tolist() for k, v in extra.items()})
    return doc


def quantum_problem_from_json(doc) -> QuantumSystem:
    _validate(doc, QUANTUM_PROBLEM_SCHEMA)
    return QuantumSystem(np.asarray(doc["H"], dtype=float), np.asarray(doc["candidates"], dtype=float),
                         complex_from_json(doc["psi0"]), complex_from_json(doc["psi1"]), _grid(doc["grid"]))


def quantum_problem_to_json(qsys: QuantumSystem, **extra) -> dict:
    doc = {"kind": "quantum", "H": qsys.H.tolist(), "candidates": qsys.candidates.tolist(),
           "psi0": complex_to_json(qsys.psi0), "psi1": complex_to_json(qsys.psi1),
           "grid": {"t_final": qsys.grid.t_final, "n_steps": qsys.grid.n_steps}}
    doc.update({k: np.asarray(v).tolist() for k, v in extra.items()})
    return doc


def result_to_json(result: GreedyResult) -> dict:
    return {
        "kind": "greedy_result",
        "selected": [int(i) for i in result.selected],
        "controls": [control_to_json(c) for c in result.controls],
        "discriminatory_values": [float(v) for v in result.discriminatory_values],
        "fitting": [{"alpha": f.alpha.tolist(), "residual": float(f.residual), "unique": bool(f.unique)}
                    for f in result.fitting_history],
        "stop_reason": result.stop_reason,
    }


def result_from_json(doc) -> GreedyResult:
    _validate(doc, RESULT_SCHEMA)
    return GreedyResult(
        controls=[control_from_json(c) for c in doc["controls"]],
        selected=list(doc["selected"]),
        fitting_history=[FittingSolution(np.asarray(f["alpha"], dtype=float), f["residual"], f.get("unique", True))
                         for f in doc.get("fitting", [])],
        discriminatory_values=list(doc["discriminatory_values"]),
        stop_reason=doc["stop_reason"],
    )


def measurements_to_json(outputs) -> dict:
    arr = np.asarray(outputs)
    data = complex_to_json(arr) if np.iscomplexobj(arr) else arr.tolist()
    return {"kind": "measurements", "complex": bool(np.iscomplexobj(arr)), "outputs": data}


def measurements_from_json(doc) -> np.ndarray:
    _validate(doc, MEASUREMENTS_SCHEMA)
    if doc.get("complex"):
        return complex_from_json(doc["outputs"])
    return np.asarray(doc["outputs"], dtype=float)


def read_json(path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def write_json(path, doc) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
    return path
