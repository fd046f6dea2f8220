"""Catalog of concrete minimal systems, their points, exact iteration and metrics.

Torus coordinates are 64-bit fixed-point numerators, so ``T^m T^n = T^(m+n)``
holds exactly. Iterates are evaluated in closed form, never step by step.

The module-level functions :func:`apply_power`, :func:`distance`,
:func:`orbit_sample` and :func:`factor_project` are the public surface; the
``table`` methods are the vectorized path the search kernels consume.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from . import fixedpoint as fx
from . import symbolic
from .errors import DimensionMismatch, KindMismatch, OverflowGuard, WindowExhausted

MAX_POWER = 1 << 40
DEFAULT_RADIUS = 1 << 12
DEFAULT_RESOLUTION = 30


# --------------------------------------------------------------------- points

@dataclass(frozen=True)
class TorusPoint:
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) & fx.MASK for c in self.coords))

    def __repr__(self):
        return "TorusPoint(" + ", ".join(f"{fx.to_float(c):.6f}" for c in self.coords) + ")"


@dataclass(frozen=True)
class SymbolicPoint:
    """Two-sided window ``w[-radius..radius]``.

    ``anchor`` lets the owning system regenerate symbols anywhere along the
    orbit: an integer offset into a substitution fixed point, or a
    ``(coding, phase)`` pair for a Sturmian coding. Unanchored windows are
    fixed data and cannot be shifted.
    """

    window: bytes
    radius: int
    anchor: object = None

    def __post_init__(self):
        if len(self.window) != 2 * self.radius + 1:
            raise ValueError("window length must be 2*radius+1")

    def symbols(self):
        return np.frombuffer(self.window, dtype=np.uint8)

    def __repr__(self):
        mid = self.symbols()[self.radius - 4:self.radius + 5]
        return f"SymbolicPoint(radius={self.radius}, anchor={self.anchor!r}, center={mid.tolist()})"


@dataclass(frozen=True)
class ProductPoint:
    left: object
    right: object


def _check_power(n):
    n = int(n)
    if abs(n) > MAX_POWER:
        raise OverflowGuard(f"|n| = {abs(n)} exceeds 2**40")
    return n


def resolution_for(delta):
    """Smallest R with 2**-(R+1) < delta: agreement on |i| <= R decides '< delta'."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    r = 0
    while 2.0 ** -(r + 1) >= delta:
        r += 1
    return r


# -------------------------------------------------------------------- systems

@dataclass(frozen=True)
class SystemSpec:
    kind: ClassVar[str] = ""
    isometric: ClassVar[bool] = False
    symbolic: ClassVar[bool] = False

    @property
    def is_minimal(self):
        return True

    # subclasses implement: check_point, power, distance, table, random_point,
    # params, point_to_json, point_from_json

    def to_json(self):
        return {"kind": self.kind, "params": self.params()}

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    def displacement(self, p, lo, hi, resolution=None):
        """``D[j - lo] = d(p, T^j p)`` for ``j`` in ``[lo, hi]``."""
        return self.table(p, p, 0, 0, q_shift=np.arange(lo, hi + 1), resolution=resolution)

    def resolution(self, delta):
        return None


class _TorusSystem(SystemSpec):
    dim: ClassVar[int] = 1

    def check_point(self, p):
        if not isinstance(p, TorusPoint) or len(p.coords) != self.dim:
            raise KindMismatch(f"{self.kind} expects a {self.dim}-dimensional TorusPoint, got {p!r}")

    def distance(self, p, q):
        self.check_point(p)
        self.check_point(q)
        return max(fx.circle_distance(a, b) for a, b in zip(p.coords, q.coords))

    def random_point(self, rng):
        return TorusPoint(tuple(rng.fraction() for _ in range(self.dim)))

    def point_to_json(self, p):
        return {"torus": [fx.dump(c) for c in p.coords]}

    def point_from_json(self, obj):
        return TorusPoint(tuple(fx.parse(c) for c in obj["torus"]))

    def table(self, p, q, lo, hi, q_shift=0, q_moves=True, resolution=None):
        """Distances ``d(T^k p, T^(k*q_moves + q_shift) q)`` for ``k`` in ``[lo, hi]``.

        ``q_shift`` may be an array broadcasting against ``k``.
        """
        ks = np.arange(lo, hi + 1, dtype=np.int64)
        a = self.orbit(p, ks)
        qk = (ks if q_moves else np.zeros_like(ks)) + np.asarray(q_shift, dtype=np.int64)
        b = self.orbit(q, qk)
        out = fx.circle_distance_array(a[0], b[0])
        for i in range(1, self.dim):
            np.maximum(out, fx.circle_distance_array(a[i], b[i]), out=out)
        return out


@dataclass(frozen=True)
class Rotation(_TorusSystem):
    """x -> x + alpha on the circle."""

    alpha: int
    minimal: bool = True
    kind: ClassVar[str] = "Rotation"
    isometric: ClassVar[bool] = True
    dim: ClassVar[int] = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", fx.parse(self.alpha))
        rational = fx.near_rational(self.alpha)
        if self.minimal and rational is not None:
            raise ValueError(
                f"alpha is {rational[0]}/{rational[1]} to grid precision; "
                "pass minimal=False for a degenerate fixture")

    @property
    def is_minimal(self):
        return self.minimal

    def params(self):
        out = {"alpha": fx.dump(self.alpha)}
        if not self.minimal:
            out["minimal"] = False
        return out

    def power(self, p, n):
        n = _check_power(n)
        return TorusPoint(((p.coords[0] + n * self.alpha) & fx.MASK,))

    def orbit(self, p, ks):
        ks = np.asarray(ks, dtype=np.int64).astype(np.uint64)
        x = np.add(np.multiply(ks, np.uint64(self.alpha), dtype=np.uint64),
                   np.uint64(p.coords[0]), dtype=np.uint64)
        return (x,)


@dataclass(frozen=True)
class SkewProduct(_TorusSystem):
    """(x, y) -> (x + alpha, y + x) on the 2-torus, a basic 2-step nilsystem.

    ``T^n(x, y) = (x + n alpha, y + n x + n(n-1)/2 alpha)``.
    """

    alpha: int
    minimal: bool = True
    kind: ClassVar[str] = "SkewProduct"
    dim: ClassVar[int] = 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", fx.parse(self.alpha))
        rational = fx.near_rational(self.alpha)
        if self.minimal and rational is not None:
            raise ValueError(
                f"alpha is {rational[0]}/{rational[1]} to grid precision; "
                "pass minimal=False for a degenerate fixture")

    @property
    def is_minimal(self):
        return self.minimal

    def params(self):
        out = {"alpha": fx.dump(self.alpha)}
        if not self.minimal:
            out["minimal"] = False
        return out

    def power(self, p, n):
        n = _check_power(n)
        x, y = p.coords
        return TorusPoint(((x + n * self.alpha) & fx.MASK,
                           (y + n * x + fx.binom2(n) * self.alpha) & fx.MASK))

    def orbit(self, p, ks):
        ks = np.asarray(ks, dtype=np.int64)
        u = ks.astype(np.uint64)
        al = np.uint64(self.alpha)
        x0, y0 = np.uint64(p.coords[0]), np.uint64(p.coords[1])
        x = np.add(np.multiply(u, al, dtype=np.uint64), x0, dtype=np.uint64)
        y = np.add(np.multiply(u, x0, dtype=np.uint64), y0, dtype=np.uint64)
        y = np.add(y, np.multiply(fx.binom2_array(ks), al, dtype=np.uint64), dtype=np.uint64)
        return (x, y)


class _SymbolicSystem(SystemSpec):
    symbolic: ClassVar[bool] = True

    def check_point(self, p):
        if not isinstance(p, SymbolicPoint):
            raise KindMismatch(f"{self.kind} expects a SymbolicPoint, got {p!r}")

    def resolution(self, delta):
        return resolution_for(delta)

    def make_point(self, anchor, radius=None):
        radius = self.radius if radius is None else radius
        syms = self._anchored_symbols(anchor, -radius, radius)
        return SymbolicPoint(syms.tobytes(), radius, anchor)

    def symbols(self, p, lo, hi):
        """Symbols of ``p`` at offsets ``lo..hi`` from its center."""
        if p.anchor is not None:
            return self._anchored_symbols(p.anchor, lo, hi)
        if lo < -p.radius or hi > p.radius:
            raise WindowExhausted(
                f"offsets {lo}..{hi} fall outside the window of radius {p.radius}")
        return p.symbols()[lo + p.radius:hi + p.radius + 1]

    def power(self, p, n):
        n = _check_power(n)
        if n == 0:
            return p
        if p.anchor is None:
            raise WindowExhausted(
                "an unanchored window cannot be shifted without losing radius")
        return self.make_point(self._shift_anchor(p.anchor, n), p.radius)

    def distance(self, p, q):
        self.check_point(p)
        self.check_point(q)
        c = min(p.radius, q.radius)
        a = p.symbols()[p.radius - c:p.radius + c + 1]
        b = q.symbols()[q.radius - c:q.radius + c + 1]
        diff = np.flatnonzero(a != b)
        if diff.size == 0:
            if p.radius != q.radius:
                raise WindowExhausted(
                    f"windows agree on radius {c} but declare radii {p.radius} and {q.radius}")
            return 0.0
        k = int(np.min(np.abs(diff - c)))
        return 2.0 ** -k

    def table(self, p, q, lo, hi, q_shift=0, q_moves=True, resolution=None):
        R = DEFAULT_RESOLUTION if resolution is None else resolution
        count = hi - lo + 1
        xs = self.symbols(p, lo - R, hi + R)
        if np.ndim(q_shift) == 0 and q_moves:
            s = int(q_shift)
            ys = self.symbols(q, lo + s - R, hi + s + R)
            first = symbolic.first_disagreement(xs != ys, count, R)
        elif np.ndim(q_shift) == 0:
            s = int(q_shift)
            qs = self.symbols(q, s - R, s + R)
            first = np.full(count, R + 1, dtype=np.int64)
            for i in range(R, -1, -1):
                hit = (xs[R + i:R + i + count] != qs[R + i]) | (xs[R - i:R - i + count] != qs[R - i])
                first[hit] = i
        else:
            # p fixed at k = lo = hi, q moves through the shifts
            shifts = np.asarray(q_shift, dtype=np.int64)
            s_lo, s_hi = int(shifts.min()), int(shifts.max())
            ys = self.symbols(q, s_lo - R, s_hi + R)
            n = s_hi - s_lo + 1
            first = np.full(n, R + 1, dtype=np.int64)
            for i in range(R, -1, -1):
                hit = (ys[R + i:R + i + n] != xs[R + i]) | (ys[R - i:R - i + n] != xs[R - i])
                first[hit] = i
            first = first[shifts - s_lo]
        return np.ldexp(1.0, -first)

    def point_to_json(self, p):
        if p.anchor is not None:
            return {"anchor": self._anchor_to_json(p.anchor), "radius": p.radius}
        return {"window": "".join(self.alphabet[s] for s in p.symbols()), "radius": p.radius}

    def point_from_json(self, obj):
        radius = int(obj.get("radius", self.radius))
        if "anchor" in obj:
            return self.make_point(self._anchor_from_json(obj["anchor"]), radius)
        idx = {c: i for i, c in enumerate(self.alphabet)}
        window = bytes(idx[c] for c in obj["window"])
        return SymbolicPoint(window, radius)

    def word(self, p, lo, hi):
        return "".join(self.alphabet[s] for s in self.symbols(p, lo, hi))


@dataclass(frozen=True)
class SubstitutionSubshift(_SymbolicSystem):
    """Orbit closure of the two-sided fixed point ``lim tau^k(s).tau^k(s)``.

    Points are anchored by their offset along that fixed point. Construction
    rejects substitutions whose minimality cannot be certified to depth 10
    (see :meth:`_validate`).
    """

    rules: tuple
    seed: str
    radius: int = DEFAULT_RADIUS
    kind: ClassVar[str] = "SubstitutionSubshift"

    def __post_init__(self):
        rules = self.rules
        if isinstance(rules, dict):
            rules = tuple(sorted(rules.items()))
        rules = tuple((str(a), str(b)) for a, b in rules)
        object.__setattr__(self, "rules", rules)
        self._validate()

    @property
    def alphabet(self):
        return tuple(a for a, _ in self.rules)

    def _images(self):
        idx = {c: i for i, c in enumerate(self.alphabet)}
        return [np.array([idx[c] for c in img], dtype=np.uint8) for _, img in self.rules]

    def _validate(self):
        letters = self.alphabet
        if len(set(letters)) != len(letters):
            raise ValueError("duplicate letters in substitution rules")
        for a, img in self.rules:
            if not img or any(c not in letters for c in img):
                raise ValueError(f"image of {a!r} must be a nonempty word over the alphabet")
        if self.seed not in letters:
            raise ValueError(f"seed {self.seed!r} not in alphabet")
        image = dict(self.rules)

        def reach(c, depth=10):
            seen, frontier = set(), {c}
            for _ in range(depth):
                frontier = {b for a in frontier for b in image[a]}
                seen |= frontier
            return seen

        reachable = {c: reach(c) for c in letters}
        bounded = {c for c in letters if all(len(image[b]) == 1 for b in reachable[c] | {c})}
        growing = [c for c in letters if c not in bounded]
        if self.seed in bounded:
            raise ValueError("seed letter must have growing iterates")
        for g in growing:
            if not set(growing) <= reachable[g]:
                raise ValueError(f"growing letters not all reachable from {g!r} within depth 10")
        if not set(letters) <= reachable[self.seed]:
            raise ValueError("some letter never occurs in the seed's iterates")
        for b in bounded:
            if not any(b in image[g] for g in growing):
                raise ValueError(f"bounded letter {b!r} does not occur in any growing image")
        # power p with tau^p(seed) starting and ending in the seed, and seed.seed legal
        word = self.seed
        power = None
        legal = False
        for k in range(1, 11):
            word = "".join(image[c] for c in word)
            if power is None and len(word) > 1 and word[0] == self.seed and word[-1] == self.seed:
                power = k
            legal = legal or (self.seed * 2 in word)
            if len(word) > 1 << 16:
                break
        if power is None or not legal:
            raise ValueError(f"{self.seed}.{self.seed} does not seed a two-sided fixed point")
        object.__setattr__(self, "_power", power)

    def params(self):
        out = {"rules": dict(self.rules), "seed": self.seed}
        if self.radius != DEFAULT_RADIUS:
            out["radius"] = self.radius
        return out

    def _anchored_symbols(self, anchor, lo, hi):
        idx = {c: i for i, c in enumerate(self.alphabet)}
        return symbolic.fixed_point_symbols(
            (self.rules, self.seed), self._images(), idx[self.seed], self._power,
            anchor + lo, anchor + hi)

    def _shift_anchor(self, anchor, n):
        return anchor + n

    def _anchor_to_json(self, anchor):
        return int(anchor)

    def _anchor_from_json(self, obj):
        return int(obj)

    def random_point(self, rng, spread=100000):
        return self.make_point(rng.integer(-spread, spread))


@dataclass(frozen=True)
class SturmianSubshift(_SymbolicSystem):
    """Codings of the rotation by ``alpha`` through the partition at ``1 - alpha``.

    An almost one-to-one extension of :class:`Rotation`: the lower and upper
    codings of a phase on the orbit of 0 differ in exactly two places.
    """

    alpha: int
    radius: int = DEFAULT_RADIUS
    kind: ClassVar[str] = "SturmianSubshift"
    alphabet: ClassVar[tuple] = ("0", "1")

    def __post_init__(self):
        object.__setattr__(self, "alpha", fx.parse(self.alpha))
        if fx.near_rational(self.alpha) is not None:
            raise ValueError("Sturmian coding needs an irrational alpha")

    def params(self):
        out = {"alpha": fx.dump(self.alpha)}
        if self.radius != DEFAULT_RADIUS:
            out["radius"] = self.radius
        return out

    def _anchored_symbols(self, anchor, lo, hi):
        coding, phase = anchor
        return symbolic.sturmian_symbols(self.alpha, phase, coding, lo, hi)

    def _shift_anchor(self, anchor, n):
        coding, phase = anchor
        return (coding, (phase + n * self.alpha) & fx.MASK)

    def _anchor_to_json(self, anchor):
        return {"coding": anchor[0], "phase": fx.dump(anchor[1])}

    def _anchor_from_json(self, obj):
        return (obj["coding"], fx.parse(obj["phase"]))

    def coding(self, phase, coding="lower", radius=None):
        return self.make_point((coding, fx.parse(phase)), radius)

    def random_point(self, rng):
        return self.coding(rng.fraction())


@dataclass(frozen=True)
class Product(SystemSpec):
    """Direct product with the max metric."""

    left: SystemSpec
    right: SystemSpec
    kind: ClassVar[str] = "Product"

    @property
    def isometric(self):
        return self.left.isometric and self.right.isometric

    @property
    def symbolic(self):
        return False

    @property
    def is_minimal(self):
        # a product of minimal systems need not be minimal; the catalog only
        # pairs rotations with rationally independent numbers
        return self.left.is_minimal and self.right.is_minimal

    def params(self):
        return {"left": self.left.to_json(), "right": self.right.to_json()}

    def check_point(self, p):
        if not isinstance(p, ProductPoint):
            raise KindMismatch(f"Product expects a ProductPoint, got {p!r}")
        self.left.check_point(p.left)
        self.right.check_point(p.right)

    def power(self, p, n):
        return ProductPoint(self.left.power(p.left, n), self.right.power(p.right, n))

    def distance(self, p, q):
        self.check_point(p)
        self.check_point(q)
        return max(self.left.distance(p.left, q.left), self.right.distance(p.right, q.right))

    def resolution(self, delta):
        return self.left.resolution(delta) or self.right.resolution(delta)

    def table(self, p, q, lo, hi, q_shift=0, q_moves=True, resolution=None):
        a = self.left.table(p.left, q.left, lo, hi, q_shift, q_moves, resolution)
        b = self.right.table(p.right, q.right, lo, hi, q_shift, q_moves, resolution)
        return np.maximum(a, b)

    def random_point(self, rng):
        return ProductPoint(self.left.random_point(rng), self.right.random_point(rng))

    def point_to_json(self, p):
        return {"left": self.left.point_to_json(p.left), "right": self.right.point_to_json(p.right)}

    def point_from_json(self, obj):
        return ProductPoint(self.left.point_from_json(obj["left"]),
                            self.right.point_from_json(obj["right"]))


KINDS = {cls.kind: cls for cls in (Rotation, SkewProduct, SubstitutionSubshift,
                                   SturmianSubshift, Product)}


def system_from_json(obj):
    """Inverse of :meth:`SystemSpec.to_json` (``{"kind": ..., "params": ...}``)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown system kind {kind!r}; expected one of {sorted(KINDS)}")
    params = dict(obj.get("params", {}))
    if kind == "Product":
        return Product(system_from_json(params["left"]), system_from_json(params["right"]))
    if kind == "SubstitutionSubshift":
        return SubstitutionSubshift(params["rules"], params["seed"],
                                    int(params.get("radius", DEFAULT_RADIUS)))
    if kind == "SturmianSubshift":
        return SturmianSubshift(params["alpha"], int(params.get("radius", DEFAULT_RADIUS)))
    return KINDS[kind](params["alpha"], bool(params.get("minimal", True)))


# -------------------------------------------------------------------- catalog

def golden_rotation():
    return Rotation(fx.GOLDEN)


def golden_skew():
    return SkewProduct(fx.GOLDEN)


def chacon(radius=DEFAULT_RADIUS):
    """Chacon's substitution a -> aaba, b -> b (minimal, weakly mixing)."""
    return SubstitutionSubshift({"a": "aaba", "b": "b"}, "a", radius)


def golden_sturmian(radius=DEFAULT_RADIUS):
    return SturmianSubshift(fx.GOLDEN, radius)


def torus_point(*coords):
    return TorusPoint(tuple(fx.parse(c) for c in coords))


# --------------------------------------------------------------- factor maps

FACTOR_KINDS = ("Identity", "SkewToRotation", "ProductToLeft", "ProductToRight")


@dataclass(frozen=True)
class FactorMap:
    source: SystemSpec
    target: SystemSpec
    kind: str

    def __post_init__(self):
        ok = {
            "Identity": self.source == self.target,
            "SkewToRotation": isinstance(self.source, SkewProduct)
            and isinstance(self.target, Rotation) and self.source.alpha == self.target.alpha,
            "ProductToLeft": isinstance(self.source, Product) and self.source.left == self.target,
            "ProductToRight": isinstance(self.source, Product) and self.source.right == self.target,
        }
        if self.kind not in ok:
            raise KindMismatch(f"unknown factor kind {self.kind!r}")
        if not ok[self.kind]:
            raise KindMismatch(f"{self.kind} is incompatible with {self.source.kind} -> {self.target.kind}")

    @classmethod
    def skew_to_rotation(cls, skew):
        return cls(skew, Rotation(skew.alpha, skew.minimal), "SkewToRotation")

    @classmethod
    def product_to_left(cls, prod):
        return cls(prod, prod.left, "ProductToLeft")

    @classmethod
    def product_to_right(cls, prod):
        return cls(prod, prod.right, "ProductToRight")

    def to_json(self):
        return {"kind": self.kind, "source": self.source.to_json(), "target": self.target.to_json()}


# ---------------------------------------------------------------- operations

def apply_power(sys, p, n):
    """``T^n p`` in closed form."""
    sys.check_point(p)
    return sys.power(p, n)


def distance(sys, p, q):
    return sys.distance(p, q)


def orbit_sample(sys, p, M):
    """``[(n, T^n p) for n in -M..M]``."""
    if M < 0:
        raise ValueError("M must be nonnegative")
    _check_power(M)
    sys.check_point(p)
    return [(n, sys.power(p, n)) for n in range(-M, M + 1)]


def factor_project(f, p):
    f.source.check_point(p)
    if f.kind == "Identity":
        return p
    if f.kind == "SkewToRotation":
        return TorusPoint((p.coords[0],))
    if f.kind == "ProductToLeft":
        return p.left
    return p.right


def same_representation(p, q):
    if type(p) is not type(q):
        raise DimensionMismatch(f"points {p!r} and {q!r} use different representations")
