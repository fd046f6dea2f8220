"""Lattice-box scans over distance tables, with a selectable backend.

``CUBELAB_BACKEND=numpy`` selects the pure-numpy fallback; the default is
numba when it imports. :func:`use_backend` switches at runtime (tests and the
benchmark use it to compare both paths).
"""
import contextlib
import os
from dataclasses import dataclass

import numpy as np

from ..errors import BudgetExceeded
from . import _numpy

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

DEFAULT_MAX_POINTS = 10 ** 9

_BACKENDS = {"numpy": _numpy}
if _numba is not None:
    _BACKENDS["numba"] = _numba


def _initial():
    name = os.environ.get("CUBELAB_BACKEND", "numba" if _numba is not None else "numpy").lower()
    if name not in _BACKENDS:
        raise ValueError(f"CUBELAB_BACKEND={name!r}; available: {sorted(_BACKENDS)}")
    return name


_active = _initial()


def backend():
    return _active


def available_backends():
    return sorted(_BACKENDS, key=lambda b: b != "numba")


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(_BACKENDS)}")
    _active = name


@contextlib.contextmanager
def use_backend(name):
    prev = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(prev)


def box_points(d, r):
    return (2 * r + 1) ** d


def budget_radius(d, box, max_points):
    """Largest r <= box whose full cube [-r, r]^d fits in max_points."""
    r = box
    while r >= 0 and box_points(d, r) > max_points:
        r -= 1
    return r


@dataclass
class ScanResult:
    found: bool
    best_n: tuple
    best_value: float
    improved: bool
    radius: int  # last shell scanned
    points: int


def _prepare(tables, active):
    tables = np.ascontiguousarray(tables, dtype=np.float64)
    active = np.ascontiguousarray(active, dtype=np.bool_)
    return tables, active


def scan_first(tables, active, d, box, delta, bound=np.inf, max_points=DEFAULT_MAX_POINTS):
    """Shell-order search of ``[-box, box]^d`` for the first value < delta.

    Raises :class:`BudgetExceeded` (carrying the partial :class:`ScanResult`)
    when the box is larger than ``max_points`` and nothing was found inside
    the affordable sub-box.
    """
    tables, active = _prepare(tables, active)
    bound = max(float(bound), float(delta))
    offset = (tables.shape[1] - 1) // 2
    r_hi = budget_radius(d, box, max_points)
    impl = _BACKENDS[_active]
    found, n, value, improved = impl.scan_first(tables, active, d, offset, 0, r_hi, float(delta), bound)
    res = ScanResult(bool(found), tuple(int(v) for v in n), float(value), bool(improved),
                     r_hi, box_points(d, max(r_hi, 0)))
    if not found and r_hi < box:
        raise BudgetExceeded(f"box {box} in dimension {d} exceeds {max_points} points", res)
    return res


def scan_collect(tables, active, d, r_lo, r_hi, cutoff, capacity=1 << 16):
    """All points of shells ``r_lo..r_hi`` with value < cutoff, in shell order."""
    tables, active = _prepare(tables, active)
    offset = (tables.shape[1] - 1) // 2
    impl = _BACKENDS[_active]
    while True:
        out_n = np.zeros((capacity, d), dtype=np.int64)
        out_v = np.zeros(capacity)
        count = impl.scan_collect(tables, active, d, offset, r_lo, r_hi, float(cutoff), out_n, out_v)
        if count <= capacity:
            return out_n[:count], out_v[:count]
        capacity = int(count)
