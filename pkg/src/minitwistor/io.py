"""JSON helpers: complex numbers as ``[re, im]`` and fixed-precision floats."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .binary_forms import BinaryForm, ProjPoint

FLOAT_DIGITS = 12


def cpx(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def from_cpx(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    return complex(x[0], x[1])


def cpx_array(a) -> list:
    return [cpx(z) for z in np.asarray(a, dtype=complex).ravel()]


def from_cpx_array(x) -> np.ndarray:
    return np.array([from_cpx(z) for z in x], dtype=complex)


def point_to_json(p: ProjPoint) -> list:
    q = p.normalized()
    return [cpx(q.z0), cpx(q.z1)]


def point_from_json(x) -> ProjPoint:
    return ProjPoint(from_cpx(x[0]), from_cpx(x[1]))


def affine_chart(p: ProjPoint) -> tuple[complex, int]:
    """``(coordinate, chart)``: chart 0 stores ``z1/z0``, chart 1 stores ``z0/z1``."""
    if abs(p.z0) >= abs(p.z1):
        return p.z1 / p.z0, 0
    return p.z0 / p.z1, 1


def from_affine_chart(x: complex, chart: int) -> ProjPoint:
    return ProjPoint(1.0, x) if chart == 0 else ProjPoint(x, 1.0)


def form_to_json(f: BinaryForm) -> list:
    return cpx_array(f.coeffs)


def form_from_json(x) -> BinaryForm:
    return BinaryForm(from_cpx_array(x))


def _round(obj: Any, digits: int):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        r = float(f"{obj:.{digits}g}")
        return 0.0 if r == 0 else r
    if isinstance(obj, (np.floating,)):
        return _round(float(obj), digits)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [_round(obj.real, digits), _round(obj.imag, digits)]
    if isinstance(obj, dict):
        return {str(k): _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), digits)
    return obj


def dumps(obj: Any, digits: int = FLOAT_DIGITS) -> str:
    """Deterministic JSON text with floats rounded to ``digits`` significant digits."""
    return json.dumps(_round(obj, digits), indent=1, sort_keys=True) + "\n"


def dump(obj: Any, path, digits: int = FLOAT_DIGITS) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj, digits))


def load(path) -> Any:
    with open(path) as fh:
        return json.load(fh)
