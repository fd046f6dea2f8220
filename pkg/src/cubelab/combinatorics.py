"""Return-time sets, their cube-condition sets in Z^d, and covering radii.

A visit set ``S = {n : T^n x in U}`` is computed exactly (fixed-point
comparisons for arcs, symbol comparisons for cylinders). The cube set of S
keeps the lattice points ``n`` whose nonempty face sums ``n . e`` all lie in
S; its covering radius over a margin-shrunk box is the finite surrogate for
syndeticity.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import distance_transform_cdt

from . import fixedpoint as fx
from . import kernels
from .cubes import CubeVector, PointSet
from .errors import KindMismatch, RangeExceeded
from .systems import TorusPoint


# -------------------------------------------------------------- neighborhoods

@dataclass(frozen=True)
class Arc:
    """Half-open arc ``[lo, hi)`` of the circle, endpoints as 2^-64 numerators.

    The arc runs counterclockwise from ``lo`` and may wrap past 0.
    ``lo == hi`` is the empty arc.
    """

    lo: int
    hi: int

    def __post_init__(self):
        object.__setattr__(self, "lo", fx.parse(self.lo))
        object.__setattr__(self, "hi", fx.parse(self.hi))

    @property
    def length(self):
        return (self.hi - self.lo) & fx.MASK

    def contains(self, v):
        return ((int(v) - self.lo) & fx.MASK) < self.length

    def contains_array(self, v):
        off = np.subtract(v, np.uint64(self.lo), dtype=np.uint64)
        return off < np.uint64(self.length)

    def to_json(self):
        return [fx.dump(self.lo), fx.dump(self.hi)]


@dataclass(frozen=True)
class ArcBox:
    """Product of arcs, one per torus coordinate."""

    arcs: tuple

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(a if isinstance(a, Arc) else Arc(*a) for a in self.arcs))

    def contains(self, p):
        return all(a.contains(c) for a, c in zip(self.arcs, p.coords))

    def to_json(self):
        return {"arcs": [a.to_json() for a in self.arcs]}


@dataclass(frozen=True)
class Cylinder:
    """Points whose symbols at ``offset .. offset+len(word)-1`` spell ``word``."""

    word: str
    offset: int = 0

    def to_json(self):
        return {"cylinder": self.word, "offset": self.offset}


@dataclass(frozen=True)
class Whole:
    def to_json(self):
        return {"whole": True}


def neighborhood_from_json(obj):
    if obj.get("whole"):
        return Whole()
    if "arcs" in obj:
        return ArcBox(tuple(Arc(lo, hi) for lo, hi in obj["arcs"]))
    if "cylinder" in obj:
        return Cylinder(obj["cylinder"], int(obj.get("offset", 0)))
    raise ValueError(f"unrecognized neighborhood {obj!r}")


# ------------------------------------------------------------------ visit sets

@dataclass(frozen=True)
class VisitSet:
    entries: np.ndarray
    M: int
    origin: dict

    def __len__(self):
        return len(self.entries)

    def __contains__(self, n):
        i = np.searchsorted(self.entries, n)
        return bool(i < len(self.entries) and self.entries[i] == n)

    @property
    def contains_base(self):
        return 0 in self

    def indicator(self, lo, hi):
        """Boolean membership array over ``[lo, hi]`` (requires it inside [-M, M])."""
        if lo < -self.M or hi > self.M:
            raise RangeExceeded(f"[{lo}, {hi}] leaves the known range [-{self.M}, {self.M}]")
        out = np.zeros(hi - lo + 1, dtype=bool)
        sel = self.entries[(self.entries >= lo) & (self.entries <= hi)]
        out[sel - lo] = True
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for v in self.entries.tolist():
                w.writerow([v])


def visit_set(sys, x, U, M):
    """``{n in [-M, M] : T^n x in U}`` by exact membership tests."""
    ks = np.arange(-M, M + 1, dtype=np.int64)
    if isinstance(U, Whole):
        hit = np.ones(len(ks), dtype=bool)
    elif isinstance(U, (Arc, ArcBox)):
        if not isinstance(x, TorusPoint):
            raise KindMismatch("arc neighborhoods need a torus system")
        arcs = (U,) if isinstance(U, Arc) else U.arcs
        coords = sys.orbit(x, ks)
        if len(arcs) != len(coords):
            raise KindMismatch(f"{len(arcs)} arcs for a {len(coords)}-dimensional torus")
        hit = np.ones(len(ks), dtype=bool)
        for a, c in zip(arcs, coords):
            hit &= a.contains_array(c)
    elif isinstance(U, Cylinder):
        if not sys.symbolic:
            raise KindMismatch("cylinder neighborhoods need a symbolic system")
        idx = {c: i for i, c in enumerate(sys.alphabet)}
        word = np.array([idx[c] for c in U.word], dtype=np.uint8)
        L = len(word)
        syms = sys.symbols(x, -M + U.offset, M + U.offset + L - 1)
        hit = np.all(sliding_window_view(syms, L) == word, axis=1)
    else:
        raise TypeError(f"unsupported neighborhood {U!r}")
    origin = {"system": sys.to_json(), "point": sys.point_to_json(x), "neighborhood": U.to_json()}
    return VisitSet(ks[hit], M, origin)


def cube_set(S, d, box):
    """``{n in [-box, box]^d : n . e in S for every nonempty e}`` in shell order."""
    if box * d > S.M:
        raise RangeExceeded(f"box*d = {box * d} exceeds the visit-set range M = {S.M}")
    K = d * box
    row = np.where(S.indicator(-K, K), 0.0, 1.0)
    tables = np.empty((1 << d, 2 * K + 1))
    tables[:] = row
    active = np.ones(1 << d, dtype=bool)
    active[0] = False
    pts, vals = kernels.scan_collect(tables, active, d, 0, box, 0.5)
    return PointSet(d, box, pts, vals)


# --------------------------------------------------------------- covering radius

@dataclass(frozen=True)
class GapReport:
    covering_radius: int  # None encodes the infinite flag
    box: int
    margin: int
    witness_gap: tuple
    d: int

    @property
    def infinite(self):
        return self.covering_radius is None

    @property
    def syndetic_evidence(self):
        return not self.infinite and self.covering_radius <= self.margin

    def to_json(self):
        return {
            "radius": "infinite" if self.infinite else self.covering_radius,
            "box": self.box,
            "margin": self.margin,
            "witness": None if self.witness_gap is None else list(self.witness_gap),
            "d": self.d,
            "syndetic_evidence": self.syndetic_evidence,
        }


def _as_mask(C, box, d):
    if isinstance(C, PointSet):
        if C.box == box:
            return C.mask()
        pts = C.points
    else:
        pts = np.array([tuple(c) for c in C], dtype=np.int64).reshape(-1, d)
    grid = np.zeros((2 * box + 1,) * d, dtype=bool)
    inside = np.all(np.abs(pts) <= box, axis=1) if len(pts) else np.zeros(0, dtype=bool)
    if inside.any():
        grid[tuple((pts[inside] + box).T)] = True
    return grid


def covering_radius(C, box, margin=None, d=None):
    """Max over the margin-shrunk box of the l-infinity distance to C.

    ``C`` is a :class:`PointSet` or an iterable of integer vectors (pass
    ``d`` when it may be empty). ``margin`` defaults to ``box // 4``.
    """
    margin = box // 4 if margin is None else margin
    if not 0 <= margin < box:
        raise ValueError("need 0 <= margin < box")
    if d is None:
        if isinstance(C, PointSet):
            d = C.d
        else:
            C = [CubeVector(c) for c in C]
            if not C:
                raise ValueError("pass d for an empty set")
            d = len(C[0])
    grid = _as_mask(C, box, d)
    inner = (slice(margin, 2 * box + 1 - margin),) * d
    if not grid[inner].any():
        return GapReport(None, box, margin, None, d)
    dist = distance_transform_cdt(~grid, metric="chessboard")[inner]
    flat = int(np.argmax(dist))
    z = np.array(np.unravel_index(flat, dist.shape)) + margin - box
    return GapReport(int(dist.flat[flat]), box, margin, tuple(int(v) for v in z), d)
