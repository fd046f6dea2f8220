"""Cube index algebra, face/parallelepiped group actions and F^[d]-orbit searches.

A cube index is a bit mask: bit ``i`` set means coordinate ``i+1`` belongs to
the subset, so mask 0 is the empty set and coordinates of a configuration are
ordered (∅, {1}, {2}, {1,2}, {3}, ...). The face group is parameterized by
``n`` in Z^d: coordinate ``e`` receives ``T^(n . e)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DimensionMismatch
from .systems import apply_power

MAX_DIM = 8
MAX_ENTRY = 1 << 32


class CubeVector(tuple):
    """An element n of Z^d (1 <= d <= 8, |n_i| <= 2**32)."""

    def __new__(cls, entries):
        entries = tuple(int(v) for v in entries)
        if not 1 <= len(entries) <= MAX_DIM:
            raise DimensionMismatch(f"dimension {len(entries)} outside 1..{MAX_DIM}")
        if any(abs(v) > MAX_ENTRY for v in entries):
            raise ValueError("cube vector entries must satisfy |n_i| <= 2**32")
        return super().__new__(cls, entries)

    @property
    def d(self):
        return len(self)

    def __add__(self, other):
        if len(other) != len(self):
            raise DimensionMismatch("adding cube vectors of different dimension")
        return CubeVector(a + b for a, b in zip(self, other))

    def __neg__(self):
        return CubeVector(-a for a in self)

    def __repr__(self):
        return f"CubeVector({tuple(self)})"


@dataclass(frozen=True)
class CubeIndex:
    d: int
    bits: int

    def __post_init__(self):
        if not 0 <= self.bits < (1 << self.d):
            raise ValueError(f"mask {self.bits} out of range for d={self.d}")

    @classmethod
    def from_set(cls, d, members):
        """From a subset of {1..d} (1-based, as in cube notation)."""
        bits = 0
        for i in members:
            if not 1 <= i <= d:
                raise ValueError(f"{i} not in [d]")
            bits |= 1 << (i - 1)
        return cls(d, bits)

    def members(self):
        return tuple(i + 1 for i in range(self.d) if self.bits >> i & 1)


def _mask(e, d):
    if isinstance(e, CubeIndex):
        if e.d != d:
            raise DimensionMismatch(f"cube index of dimension {e.d} used with d={d}")
        return e.bits
    return int(e)


def dot(n, e):
    """``n . e``, the sum of ``n_i`` over ``i`` in ``e``."""
    d = len(n)
    bits = _mask(e, d)
    if bits >> d:
        raise DimensionMismatch(f"mask {bits} has bits beyond d={d}")
    return sum(v for i, v in enumerate(n) if bits >> i & 1)


def subset_matrix(d):
    """(d, 2^d) 0/1 matrix whose column e lists the members of e."""
    masks = np.arange(1 << d)
    return ((masks[None, :] >> np.arange(d)[:, None]) & 1).astype(np.int64)


@dataclass(frozen=True)
class CubeConfiguration:
    """A point of X^[d]: 2^d points indexed by cube masks."""

    d: int
    coords: tuple

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise DimensionMismatch(f"dimension {self.d} outside 1..{MAX_DIM}")
        if len(self.coords) != 1 << self.d:
            raise DimensionMismatch(f"expected {1 << self.d} coordinates, got {len(self.coords)}")
        object.__setattr__(self, "coords", tuple(self.coords))

    def __getitem__(self, e):
        return self.coords[_mask(e, self.d)]

    @classmethod
    def diagonal(cls, x, d):
        return cls(d, (x,) * (1 << d))

    def halves(self):
        """Split into the faces with and without coordinate d."""
        h = 1 << (self.d - 1)
        return CubeConfiguration(self.d - 1, self.coords[:h]), CubeConfiguration(self.d - 1, self.coords[h:])


def _as_vector(n, d=None):
    n = n if isinstance(n, CubeVector) else CubeVector(n)
    if d is not None and n.d != d:
        raise DimensionMismatch(f"vector of dimension {n.d} used with d={d}")
    return n


def cube_point(sys, x, n):
    """The generator ``(T^(n . e) x : e)`` of the dynamical parallelepiped."""
    n = _as_vector(n)
    return CubeConfiguration(n.d, tuple(apply_power(sys, x, dot(n, e)) for e in range(1 << n.d)))


def face_act(sys, c, n):
    n = _as_vector(n, c.d)
    return CubeConfiguration(c.d, tuple(
        p if e == 0 else apply_power(sys, p, dot(n, e)) for e, p in enumerate(c.coords)))


def parallelepiped_act(sys, c, n, k):
    """General element of the parallelepiped group: face part n, diagonal part k."""
    n = _as_vector(n, c.d)
    return CubeConfiguration(c.d, tuple(
        apply_power(sys, p, dot(n, e) + k) for e, p in enumerate(c.coords)))


def _check_perm(sigma, d):
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(d)):
        raise ValueError(f"{sigma} is not a permutation of 0..{d - 1}")
    return sigma


def permute_mask(bits, sigma):
    out = 0
    for i, s in enumerate(sigma):
        if bits >> i & 1:
            out |= 1 << s
    return out


def permute_cube(c, sigma):
    """Relabel cube coordinates by ``sigma`` (0-based: coordinate i goes to sigma[i]).

    ``result[sigma(e)] = c[e]``.
    """
    sigma = _check_perm(sigma, c.d)
    out = [None] * (1 << c.d)
    for e, p in enumerate(c.coords):
        out[permute_mask(e, sigma)] = p
    return CubeConfiguration(c.d, tuple(out))


def permute_vector(n, sigma):
    """``sigma(n)`` with ``sigma(n)[sigma[i]] = n[i]``."""
    sigma = _check_perm(sigma, len(n))
    out = [0] * len(n)
    for i, s in enumerate(sigma):
        out[s] = n[i]
    return CubeVector(out)


# ------------------------------------------------------------------ searches

@dataclass(frozen=True)
class PointSet:
    """A finite subset of a lattice box, kept in shell order."""

    d: int
    box: int
    points: np.ndarray
    values: np.ndarray = None

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return (CubeVector(p) for p in self.points.tolist())

    def __contains__(self, n):
        return tuple(n) in self.as_set()

    def as_set(self):
        return {tuple(p) for p in self.points.tolist()}

    def mask(self):
        """Boolean array over [-box, box]^d marking members."""
        grid = np.zeros((2 * self.box + 1,) * self.d, dtype=bool)
        if len(self.points):
            grid[tuple((self.points + self.box).T)] = True
        return grid

    def write_csv(self, path, with_values=True):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for i, p in enumerate(self.points.tolist()):
                row = list(p)
                if with_values and self.values is not None:
                    row.append(repr(float(self.values[i])))
                w.writerow(row)


def config_tables(sys, start, target, box, resolution=None):
    """``tables[e, k] = d(T^k start[e], target[e])`` for |k| <= d*box."""
    d = start.d
    K = d * box
    rows = []
    for e in range(1 << d):
        if e == 0:
            rows.append(np.full(2 * K + 1, sys.distance(start[0], target[0])))
        else:
            rows.append(sys.table(start[e], target[e], -K, K, q_moves=False, resolution=resolution))
    return np.stack(rows)


@dataclass(frozen=True)
class ApproachReport:
    found: bool
    n: CubeVector
    achieved: float
    budget: dict

    def to_json(self):
        return {"found": self.found, "n": list(self.n), "achieved": self.achieved, "budget": self.budget}


def cube_approach(sys, start, target, box, delta, max_points=kernels.DEFAULT_MAX_POINTS):
    """Search the F^[d]-orbit of ``start`` for a delta-approach to ``target``.

    Returns the first ``n`` (shell order) with every coordinate of
    ``face_act(start, n)`` within ``delta`` of ``target``; otherwise the
    report carries the minimum achieved max-distance over the box.
    """
    if start.d != target.d:
        raise DimensionMismatch("start and target have different dimensions")
    if delta <= 0:
        raise ValueError("delta must be positive")
    d = start.d
    tables = config_tables(sys, start, target, box, sys.resolution(delta))
    active = np.ones(1 << d, dtype=bool)
    budget = {"box": box, "delta": delta, "d": d}
    try:
        res = kernels.scan_first(tables, active, d, box, delta, max_points=max_points)
    except BudgetExceeded as exc:
        part = exc.best
        raise BudgetExceeded(str(exc), ApproachReport(False, CubeVector(part.best_n), part.best_value,
                                                      dict(budget, scanned_radius=part.radius))) from None
    return ApproachReport(res.found, CubeVector(res.best_n), res.best_value, budget)


def return_times(sys, c, target, box, delta, stream=None, max_points=5 * 10 ** 7):
    """All n in [-box, box]^d with face_act(c, n) delta-close to target.

    Without ``stream`` the hits are returned as a :class:`PointSet` (raising
    BudgetExceeded past ``max_points``). With ``stream`` (a path or writable
    file) hits are written as CSV rows ``n_1,...,n_d,achieved`` shell by
    shell and the hit count is returned.
    """
    if c.d != target.d:
        raise DimensionMismatch("configuration and target have different dimensions")
    d = c.d
    tables = config_tables(sys, c, target, box, sys.resolution(delta))
    active = np.ones(1 << d, dtype=bool)
    if stream is None:
        if kernels.box_points(d, box) > max_points:
            raise BudgetExceeded(f"box {box} in dimension {d} exceeds {max_points} points; use stream=")
        pts, vals = kernels.scan_collect(tables, active, d, 0, box, delta)
        return PointSet(d, box, pts, vals)
    close = False
    if isinstance(stream, (str, bytes)) or hasattr(stream, "__fspath__"):
        stream = open(stream, "w", newline="")
        close = True
    try:
        w = csv.writer(stream)
        total = 0
        step = max(1, box // 16)
        for r0 in range(0, box + 1, step):
            pts, vals = kernels.scan_collect(tables, active, d, r0, min(box, r0 + step - 1), delta)
            for p, v in zip(pts.tolist(), vals.tolist()):
                w.writerow(p + [repr(v)])
            total += len(vals)
        return total
    finally:
        if close:
            stream.close()
