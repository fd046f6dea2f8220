"""numba implementations of the lattice-scan kernels.

Both kernels walk ``n`` in ``[-r, r]^d`` shell by shell (increasing sup-norm
``r``, lexicographic inside a shell) as an iterative depth-first search. At
depth ``j`` the partial maximum covers every active subset whose largest
element is ``j``; subtrees whose partial maximum already reaches the bound
are skipped.

``tables[e, k + offset]`` is the distance attached to cube index ``e`` when
``n . e = k``. Row 0 (the empty index) is read once at ``offset``.
"""
import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def _zero_value(tables, active, offset):
    v = tables[0, offset] if active[0] else 0.0
    for e in range(1, tables.shape[0]):
        if active[e] and tables[e, offset] > v:
            v = tables[e, offset]
    return v


@njit(**_OPTS)
def scan_first(tables, active, d, offset, r_lo, r_hi, delta, bound):
    """First ``n`` in shell order with value < delta, tracking the running minimum.

    Returns ``(found, best_n, best_value, improved)``. ``best_value`` starts at
    ``bound`` and only strict improvements update ``best_n`` (so ties keep the
    earliest point). ``bound`` must be >= ``delta``.
    """
    nmask = 1 << d
    n = np.zeros(d, np.int64)
    best_n = np.zeros(d, np.int64)
    sums = np.zeros(nmask, np.int64)
    pm = np.zeros(d + 1)
    nb = np.zeros(d + 1, np.int64)
    pm[0] = tables[0, offset] if active[0] else 0.0
    best = bound
    improved = False
    for r in range(r_lo, r_hi + 1):
        if r == 0:
            v = _zero_value(tables, active, offset)
            if v < best:
                best = v
                best_n[:] = 0
                improved = True
                if v < delta:
                    return True, best_n, best, improved
            continue
        j = 0
        n[0] = -r - 1
        while j >= 0:
            cur = n[j]
            if j == d - 1 and nb[j] == 0:
                if cur < -r:
                    cur = -r
                elif cur == -r:
                    cur = r
                else:
                    j -= 1
                    continue
            else:
                cur += 1
                if cur > r:
                    j -= 1
                    continue
            n[j] = cur
            bit = 1 << j
            m = pm[j]
            for s in range(bit):
                t = sums[s] + cur
                sums[s | bit] = t
                if active[s | bit]:
                    val = tables[s | bit, t + offset]
                    if val > m:
                        m = val
            if m >= best:
                continue
            if j == d - 1:
                best = m
                best_n[:] = n
                improved = True
                if m < delta:
                    return True, best_n, best, improved
            else:
                pm[j + 1] = m
                nb[j + 1] = nb[j] + (1 if (cur == r or cur == -r) else 0)
                j += 1
                n[j] = -r - 1
    return False, best_n, best, improved


@njit(**_OPTS)
def scan_collect(tables, active, d, offset, r_lo, r_hi, cutoff, out_n, out_v):
    """Every ``n`` in the shells with value < cutoff, in shell order.

    Writes up to ``len(out_v)`` hits and returns the total hit count; the
    caller retries with larger buffers when the count exceeds capacity.
    """
    nmask = 1 << d
    cap = out_v.shape[0]
    n = np.zeros(d, np.int64)
    sums = np.zeros(nmask, np.int64)
    pm = np.zeros(d + 1)
    nb = np.zeros(d + 1, np.int64)
    pm[0] = tables[0, offset] if active[0] else 0.0
    count = 0
    for r in range(r_lo, r_hi + 1):
        if r == 0:
            v = _zero_value(tables, active, offset)
            if v < cutoff:
                if count < cap:
                    out_n[count, :] = 0
                    out_v[count] = v
                count += 1
            continue
        j = 0
        n[0] = -r - 1
        while j >= 0:
            cur = n[j]
            if j == d - 1 and nb[j] == 0:
                if cur < -r:
                    cur = -r
                elif cur == -r:
                    cur = r
                else:
                    j -= 1
                    continue
            else:
                cur += 1
                if cur > r:
                    j -= 1
                    continue
            n[j] = cur
            bit = 1 << j
            m = pm[j]
            for s in range(bit):
                t = sums[s] + cur
                sums[s | bit] = t
                if active[s | bit]:
                    val = tables[s | bit, t + offset]
                    if val > m:
                        m = val
            if m >= cutoff:
                continue
            if j == d - 1:
                if count < cap:
                    out_n[count, :] = n
                    out_v[count] = m
                count += 1
            else:
                pm[j + 1] = m
                nb[j + 1] = nb[j] + (1 if (cur == r or cur == -r) else 0)
                j += 1
                n[j] = -r - 1
    return count
