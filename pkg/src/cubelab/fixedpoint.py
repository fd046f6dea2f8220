"""64-bit fixed-point fractions of the circle and the seeded sample generator.

A fraction is stored as its numerator ``a`` in ``[0, 2**64)`` and means
``a / 2**64``. All arithmetic is modulo ``2**64`` so rotations wrap exactly.
"""
from fractions import Fraction
from math import isqrt

import numpy as np

ONE = 1 << 64
MASK = ONE - 1
HALF = 1 << 63

# numerators of the catalog's irrational rotation numbers
GOLDEN = (isqrt(5 << 128) - ONE) >> 1  # (sqrt(5) - 1) / 2
SILVER = isqrt(2 << 128) - ONE  # sqrt(2) - 1

NAMED = {"golden": GOLDEN, "silver": SILVER}


def from_fraction(p, q=1):
    """Numerator of ``p/q mod 1`` rounded down to the fixed-point grid."""
    return ((p << 64) // q) & MASK


def parse(value):
    """Read a fraction from a numerator string, a named constant or a number.

    Strings of digits are numerators (the serialization format). Strings with
    a ``/`` or ``.`` are read as rationals/decimals of the unit interval.
    """
    if isinstance(value, bool):
        raise TypeError("boolean is not a fraction")
    if isinstance(value, int):
        return value & MASK
    if isinstance(value, float):
        f = Fraction(value)
        return from_fraction(f.numerator, f.denominator)
    if isinstance(value, str):
        s = value.strip()
        if s in NAMED:
            return NAMED[s]
        if s.isdigit():
            a = int(s)
            if a >= ONE:
                raise ValueError(f"numerator {s} is not below 2**64")
            return a
        f = Fraction(s)
        return from_fraction(f.numerator, f.denominator)
    raise TypeError(f"cannot read a fraction from {value!r}")


def dump(a):
    return str(int(a))


def to_float(a):
    return int(a) / ONE


def circle_distance(a, b):
    """Circular distance between two numerators, as a float in [0, 1/2]."""
    diff = (a - b) & MASK
    return min(diff, ONE - diff) / ONE


def circle_distance_array(a, b):
    """Vectorized :func:`circle_distance` for uint64 arrays."""
    diff = np.subtract(a, b, dtype=np.uint64)
    dist = np.minimum(diff, np.negative(diff, dtype=np.uint64))
    return dist.astype(np.float64) / float(ONE)


def near_rational(a, max_den=1 << 16):
    """Return ``(p, q)`` if ``a/2**64`` is within grid rounding of p/q, q <= max_den."""
    approx = Fraction(a, ONE).limit_denominator(max_den)
    p, q = approx.numerator, approx.denominator
    if abs(a * q - (p << 64)) <= q:
        return p, q
    return None


def binom2(n):
    """``n(n-1)/2 mod 2**64`` for a Python int."""
    return (n * (n - 1) // 2) & MASK


def binom2_array(n):
    """``n(n-1)/2 mod 2**64`` for an int64 array, exact for any int64 input."""
    n = np.asarray(n, dtype=np.int64)
    even = (n & 1) == 0
    half = np.where(even, n // 2, (n - 1) // 2).astype(np.uint64)
    other = np.where(even, n - 1, n).astype(np.uint64)
    return np.multiply(half, other, dtype=np.uint64)


class LCG:
    """64-bit linear congruential generator (Knuth's MMIX constants).

    ``state <- 6364136223846793005 * state + 1442695040888963407 mod 2**64``;
    each draw returns the new state. Fractions are raw states, integers in
    ``[lo, hi]`` use the multiply-shift ``lo + (state * span) >> 64``.
    """

    A = 6364136223846793005
    C = 1442695040888963407

    def __init__(self, seed):
        self.state = int(seed) & MASK

    def next(self):
        self.state = (self.A * self.state + self.C) & MASK
        return self.state

    def fraction(self):
        return self.next()

    def integer(self, lo, hi):
        span = hi - lo + 1
        return lo + ((self.next() * span) >> 64)

    def fraction_in(self, lo, hi):
        """Numerator uniformly drawn from ``[lo, hi)`` given as float bounds."""
        lo_n = int(lo * ONE)
        hi_n = int(hi * ONE)
        return (lo_n + ((self.next() * (hi_n - lo_n)) >> 64)) & MASK
