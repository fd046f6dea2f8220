"""Pure-numpy implementations of the lattice-scan kernels.

Same contracts as :mod:`cubelab.kernels._numba`; shells are materialized in
chunks and evaluated with fancy indexing instead of a pruned DFS.
"""
import numpy as np

CHUNK = 1 << 18


def _grid(r, k):
    """All of [-r, r]^k in lexicographic order, shape (P, k)."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    axes = np.arange(-r, r + 1, dtype=np.int64)
    mesh = np.meshgrid(*([axes] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def shell_points(r, d):
    """Points of sup-norm exactly r in lexicographic order."""
    if r == 0:
        return np.zeros((1, d), dtype=np.int64)
    if d == 1:
        return np.array([[-r], [r]], dtype=np.int64)
    pre = _grid(r, d - 1)
    onb = np.any(np.abs(pre) == r, axis=1)
    counts = np.where(onb, 2 * r + 1, 2)
    rows = np.repeat(pre, counts, axis=0)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    idx = np.arange(rows.shape[0], dtype=np.int64) - starts
    full = np.repeat(onb, counts)
    last = np.where(full, idx - r, np.where(idx == 0, -r, r))
    return np.concatenate([rows, last[:, None]], axis=1)


def _shells(d, r_lo, r_hi):
    """Yield point chunks covering shells r_lo..r_hi in order."""
    if d == 1:
        # 0, -1, 1, -2, 2, ... without per-shell overhead
        start = r_lo
        while start <= r_hi:
            stop = min(r_hi, start + CHUNK // 2)
            rs = np.arange(max(start, 1), stop + 1, dtype=np.int64)
            body = np.stack([-rs, rs], axis=1).ravel()
            if start == 0:
                body = np.concatenate([[0], body])
            yield body[:, None]
            start = stop + 1
        return
    buf, size = [], 0
    for r in range(r_lo, r_hi + 1):
        pts = shell_points(r, d)
        buf.append(pts)
        size += len(pts)
        if size >= CHUNK:
            yield np.concatenate(buf)
            buf, size = [], 0
    if buf:
        yield np.concatenate(buf)


def _values(tables, active, d, offset, pts):
    masks = np.arange(1 << d, dtype=np.int64)
    bits = (masks[None, :] >> np.arange(d)[:, None]) & 1  # (d, 2^d)
    sums = pts @ bits
    idx = np.flatnonzero(active)
    if len(idx) == 0:
        return np.zeros(len(pts))
    vals = tables[idx[:, None], sums[:, idx].T + offset]  # (|active|, P)
    return vals.max(axis=0)


def scan_first(tables, active, d, offset, r_lo, r_hi, delta, bound):
    best = bound
    best_n = np.zeros(d, dtype=np.int64)
    improved = False
    for pts in _shells(d, r_lo, r_hi):
        vals = _values(tables, active, d, offset, pts)
        hit = np.flatnonzero(vals < delta)
        stop = hit[0] + 1 if hit.size else len(vals)
        i = int(np.argmin(vals[:stop]))
        if vals[i] < best:
            best = float(vals[i])
            best_n = pts[i].copy()
            improved = True
        if hit.size:
            return True, best_n, best, improved
    return False, best_n, best, improved


def scan_collect(tables, active, d, offset, r_lo, r_hi, cutoff, out_n, out_v):
    cap = len(out_v)
    count = 0
    for pts in _shells(d, r_lo, r_hi):
        vals = _values(tables, active, d, offset, pts)
        keep = np.flatnonzero(vals < cutoff)
        room = max(0, min(len(keep), cap - count))
        out_n[count:count + room] = pts[keep[:room]]
        out_v[count:count + room] = vals[keep[:room]]
        count += len(keep)
    return count
