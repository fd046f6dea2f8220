"""Symbol generation for substitution fixed points and Sturmian codings."""
import threading

import numpy as np

from .errors import WindowExhausted
from .fixedpoint import ONE

# two-sided fixed points are materialized up to this many symbols per side
MAX_HALF_LENGTH = 1 << 25

_lock = threading.Lock()
_words = {}


def substitute(word, images):
    """Apply a substitution (list of uint8 image arrays) to a uint8 word."""
    lens = np.array([len(im) for im in images], dtype=np.int64)
    flat = np.concatenate(images).astype(np.uint8)
    starts = np.concatenate([[0], np.cumsum(lens)[:-1]])
    wl = lens[word]
    total = int(wl.sum())
    block_start = np.repeat(np.cumsum(wl) - wl, wl)
    src = np.repeat(starts[word], wl) + (np.arange(total, dtype=np.int64) - block_start)
    return flat[src]


def iterate(word, images, k):
    for _ in range(k):
        word = substitute(word, images)
    return word


def fixed_word(key, images, seed, power, min_len):
    """Prefix of ``lim tau^(power*k)(seed)`` of length at least ``min_len``.

    The same word is a suffix of every later iterate, so it also supplies the
    left half of the two-sided fixed point seeded ``seed.seed``.
    """
    with _lock:
        word = _words.get(key)
        if word is not None and len(word) >= min_len:
            return word
        if word is None:
            word = np.array([seed], dtype=np.uint8)
        while len(word) < min_len:
            word = iterate(word, images, power)
        _words[key] = word
        return word


def fixed_point_symbols(key, images, seed, power, lo, hi):
    """Symbols at positions ``lo..hi`` of the two-sided fixed point."""
    need = max(hi + 1, -lo, 1)
    if need > MAX_HALF_LENGTH:
        raise WindowExhausted(
            f"positions {lo}..{hi} exceed the materialized fixed point "
            f"(|i| < {MAX_HALF_LENGTH})")
    word = fixed_word(key, images, seed, power, need)
    L = len(word)
    pos = np.arange(lo, hi + 1, dtype=np.int64)
    return word[np.where(pos >= 0, pos, L + pos)]


def sturmian_symbols(alpha, phase, coding, lo, hi):
    """Coding of the rotation orbit of ``phase`` by the partition at ``1 - alpha``.

    ``lower`` codes with [0, 1-alpha) -> 0, [1-alpha, 1) -> 1; ``upper`` with
    (0, 1-alpha] -> 0 and the rest -> 1. The two agree off the orbit of 0.
    """
    i = np.arange(lo, hi + 1, dtype=np.int64).astype(np.uint64)
    y = np.add(np.multiply(i, np.uint64(alpha), dtype=np.uint64),
               np.uint64(phase), dtype=np.uint64)
    cut = np.uint64(ONE - alpha)
    if coding == "lower":
        sym = y >= cut
    elif coding == "upper":
        sym = (y > cut) | (y == 0)
    else:
        raise ValueError(f"unknown coding {coding!r}")
    return sym.astype(np.uint8)


def first_disagreement(mism, count, radius):
    """For each t < count, the least i <= radius with a mismatch at t+radius±i.

    ``mism`` has length ``count + 2*radius``. Entries with no mismatch in
    range get ``radius + 1``.
    """
    first = np.full(count, radius + 1, dtype=np.int64)
    for i in range(radius, -1, -1):
        hit = mism[radius + i:radius + i + count] | mism[radius - i:radius - i + count]
        first[hit] = i
    return first
