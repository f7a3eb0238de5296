"""Deterministic JSON serialization for reports and input documents.

Reports must be byte-identical across runs for a fixed configuration and
seed, so floats are written with 17 significant digits (full double
round-trip precision), dictionary keys are sorted, and nothing time- or
path-dependent is ever placed in a payload.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

from .errors import BadSpec


def _float_repr(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError("cannot serialize a non-finite float")
    return format(x, ".17g")


def canonical_dumps(obj: Any) -> str:
    """Serialize to canonical JSON: sorted keys, 17-significant-digit floats."""
    out: list[str] = []
    _write(obj, out)
    return "".join(out)


def _write(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float_repr(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        first = True
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(key))
            out.append(":")
            _write(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)) or (isinstance(obj, np.ndarray) and obj.ndim >= 1):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to canonical JSON")


def config_hash(config: Any) -> str:
    """Stable hash of a configuration document."""
    return hashlib.sha256(canonical_dumps(config).encode("ascii")).hexdigest()


def complex_to_json(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def complex_from_json(item: Any) -> complex:
    if (
        not isinstance(item, (list, tuple))
        or len(item) != 2
        or not all(isinstance(p, (int, float)) for p in item)
    ):
        raise BadSpec(f"complex entries must be [re, im] pairs, got {item!r}")
    return complex(item[0], item[1])


def matrix_to_json(m: np.ndarray) -> list[list[list[float]]]:
    m = np.asarray(m)
    return [[complex_to_json(m[i, j]) for j in range(m.shape[1])] for i in range(m.shape[0])]


def matrix_from_json(rows: Any) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise BadSpec("matrix must be a non-empty list of rows")
    width = None
    data = []
    for row in rows:
        if not isinstance(row, list):
            raise BadSpec("matrix rows must be lists")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise BadSpec("matrix rows must all have the same length")
        data.append([complex_from_json(item) for item in row])
    return np.array(data, dtype=complex)


def load_document(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise BadSpec(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BadSpec(f"{path} is not valid JSON: {exc}") from exc
