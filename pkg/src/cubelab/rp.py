"""Bounded-budget decision procedures for RP^[d] membership and proximality.

Every search is semi-decidable: a found witness is a certificate at the
stated tolerance, a not-found result only says the budget was exhausted and
reports the smallest max-distance it saw.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cubes import CubeVector, dot
from .errors import BudgetExceeded

WITNESSED = "witnessed"
REFUTED = "refuted-at-budget"
OVER_BUDGET = "budget-exceeded"


@dataclass(frozen=True)
class WitnessReport:
    """Outcome of a bounded witness search.

    ``n``/``aux_m`` are set when found. ``best_n``/``best_m`` locate where
    ``achieved`` (the minimum over the budget of the max-distance over all
    checked conditions) was realized; they coincide with the witness when
    found.
    """

    found: bool
    n: tuple = None
    aux_m: int = None
    achieved: float = float("inf")
    budget: dict = field(default_factory=dict)
    best_n: tuple = None
    best_m: int = None
    hits: tuple = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.found and not self.achieved < self.budget.get("delta", float("inf")):
            raise ValueError("a found witness must have achieved < delta")

    def to_json(self):
        out = {
            "found": self.found,
            "n": None if self.n is None else list(self.n),
            "aux_m": self.aux_m,
            "achieved": self.achieved,
            "budget": self.budget,
            "best_n": None if self.best_n is None else list(self.best_n),
            "best_m": self.best_m,
        }
        if self.hits is not None:
            out["hits"] = list(self.hits)
        if self.extra:
            out["extra"] = self.extra
        return out


def orbit_order(lo, hi):
    """Integers of [lo, hi] ordered 0, -1, 1, -2, 2, ... (|m| then sign)."""
    r = max(abs(lo), abs(hi))
    out = [0] if lo <= 0 <= hi else []
    for k in range(1, r + 1):
        if -k >= lo:
            out.append(-k)
        if k <= hi:
            out.append(k)
    return np.array(out, dtype=np.int64)


def rp_condition(sys, x, y, n, m=0):
    """Replay a witness with exact point arithmetic.

    Returns ``max(d(y, T^m y), max over nonempty e of d(T^(n.e) x, T^(n.e+m) y))``.
    """
    yp = sys.power(y, m)
    worst = sys.distance(y, yp)
    for e in range(1, 1 << len(n)):
        k = dot(n, e)
        worst = max(worst, sys.distance(sys.power(x, k), sys.power(yp, k)))
    return worst


def _fill(d, row, row0):
    tables = np.empty((1 << d, len(row)))
    tables[:] = row
    tables[0] = row0
    return tables


def rp_witness(sys, x, y, d, delta, box, M, max_points=kernels.DEFAULT_MAX_POINTS):
    """Search for (m, n) certifying that (x, y) is regionally proximal of order d.

    ``x'`` is pinned to ``x``; ``y' = T^m y`` for ``m`` in ``[-M, M]`` with
    ``d(y, y') < delta``. Candidates are visited m-major (``0, -1, 1, ...``)
    and n in shell order; the first (m, n) with every nonempty-face distance
    below ``delta`` is returned.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if not 1 <= d <= 8:
        raise ValueError("d must lie in 1..8")
    R = sys.resolution(delta)
    K = d * box
    budget = {"d": d, "delta": delta, "box": box, "M": M}
    if R is not None:
        budget["resolution"] = R
    disp = sys.displacement(y, -M, M, R)
    active = np.ones(1 << d, dtype=bool)
    best, best_m, best_n = np.inf, None, None
    admissible = 0
    for m in orbit_order(-M, M).tolist():
        dm = disp[m + M]
        if not dm < delta:
            continue
        admissible += 1
        if dm >= best:
            continue
        row = sys.table(x, y, -K, K, q_shift=m, resolution=R)
        try:
            res = kernels.scan_first(_fill(d, row, dm), active, d, box, delta, bound=best,
                                     max_points=max_points)
        except BudgetExceeded as exc:
            part = exc.best
            if part.improved:
                best, best_m, best_n = part.best_value, m, part.best_n
            report = WitnessReport(False, None, None, best, dict(budget, admissible_m=admissible),
                                   best_n, best_m)
            raise BudgetExceeded(str(exc), report) from None
        if res.improved:
            best, best_m, best_n = res.best_value, m, res.best_n
        if res.found:
            return WitnessReport(True, CubeVector(res.best_n), m, res.best_value,
                                 dict(budget, admissible_m=admissible), res.best_n, m)
    return WitnessReport(False, None, None, float(best), dict(budget, admissible_m=admissible),
                         best_n, best_m)


def rp_via_corner(sys, x, y, d, delta, box, max_points=kernels.DEFAULT_MAX_POINTS):
    """Search for ``(x, ..., x, y)`` near the parallelepiped of dimension d+1.

    Base points are ``z = T^m x`` with ``|m| <= box`` and ``d(z, x) < delta``;
    for each, ``n`` ranges over ``[-box, box]^(d+1)`` in shell order and the
    generator ``cube_point(z, n)`` must be within delta of the target in the
    max-metric (all 2^(d+1) coordinates, ``y`` in the last corner).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    D = d + 1
    R = sys.resolution(delta)
    K = D * box
    full = (1 << D) - 1
    budget = {"d": d, "delta": delta, "box": box, "corner_dim": D}
    if R is not None:
        budget["resolution"] = R
    disp = sys.displacement(x, -box, box, R)
    active = np.ones(1 << D, dtype=bool)
    best, best_m, best_n = np.inf, None, None
    admissible = 0
    for m in orbit_order(-box, box).tolist():
        dm = disp[m + box]
        if not dm < delta:
            continue
        admissible += 1
        if dm >= best:
            continue
        to_x = sys.table(x, x, m - K, m + K, q_moves=False, resolution=R)
        to_y = sys.table(x, y, m - K, m + K, q_moves=False, resolution=R)
        tables = _fill(D, to_x, dm)
        tables[full] = to_y
        try:
            res = kernels.scan_first(tables, active, D, box, delta, bound=best, max_points=max_points)
        except BudgetExceeded as exc:
            part = exc.best
            if part.improved:
                best, best_m, best_n = part.best_value, m, part.best_n
            raise BudgetExceeded(str(exc), WitnessReport(
                False, None, None, best, dict(budget, admissible_m=admissible), best_n, best_m)) from None
        if res.improved:
            best, best_m, best_n = res.best_value, m, res.best_n
        if res.found:
            return WitnessReport(True, CubeVector(res.best_n), m, res.best_value,
                                 dict(budget, admissible_m=admissible), res.best_n, m)
    return WitnessReport(False, None, None, float(best), dict(budget, admissible_m=admissible),
                         best_n, best_m)


def prox_witness(sys, x, y, delta, N):
    """``N_delta(x, y) = {n : d(T^n x, T^n y) < delta}`` restricted to [-N, N]."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    R = sys.resolution(delta)
    row = sys.table(x, y, -N, N, resolution=R)
    hits = tuple((np.flatnonzero(row < delta) - N).tolist())
    i = int(np.argmin(row))
    budget = {"delta": delta, "N": N}
    if R is not None:
        budget["resolution"] = R
    return WitnessReport(bool(hits), None, 0, float(row[i]), budget, None, 0, hits,
                         {"closest_n": i - N})


def finite_sums(gens):
    sums = []
    for p in gens:
        sums = sums + [s + p for s in sums] + [p]
    return sums


def fs_in_set(S, d):
    """Generators p_1 < ... < p_d whose nonempty finite sums all lie in S.

    Generators are positive (an IP set is generated by a sequence in N).
    Depth-first over S in increasing order, so the result is the
    lexicographically least generator tuple; None when there is none.
    """
    if not 1 <= d <= 8:
        raise ValueError("d must lie in 1..8")
    members = set(int(s) for s in S)
    elems = sorted(s for s in members if s > 0)

    def extend(gens, sums, cands):
        if len(gens) == d:
            return gens
        for idx, p in enumerate(cands):
            new = [s + p for s in sums]
            if all(v in members for v in new):
                nxt = [q for q in cands[idx + 1:] if all(q + v in members for v in new)]
                if len(nxt) < d - len(gens) - 1:
                    continue
                out = extend(gens + [p], sums + new + [p], nxt)
                if out is not None:
                    return out
        return None

    gens = extend([], [], elems)
    if gens is None:
        return None
    assert set(finite_sums(gens)) <= members
    return tuple(gens)


# ------------------------------------------------------------ relation audit

@dataclass
class RelationReport:
    pairs: list
    symmetry_violations: int
    transitivity_probes: list
    budget: dict
    verdict: str = None
    exact: bool = False

    @property
    def witnessed(self):
        return sum(1 for p in self.pairs if p["classification"] == WITNESSED)

    @property
    def refuted(self):
        return sum(1 for p in self.pairs if p["classification"] == REFUTED)

    def to_json(self):
        return {
            "verdict": self.verdict,
            "exact": self.exact,
            "budget": self.budget,
            "counts": {"pairs": len(self.pairs), "witnessed": self.witnessed,
                       "refuted": self.refuted,
                       "budget_exceeded": len(self.pairs) - self.witnessed - self.refuted},
            "symmetry_violations": self.symmetry_violations,
            "pairs": [{**{k: v for k, v in p.items() if k != "report"},
                       "report": p["report"].to_json()} for p in self.pairs],
            "transitivity_probes": [{**{k: v for k, v in t.items() if k != "report"},
                                     "report": t["report"].to_json()}
                                    for t in self.transitivity_probes],
        }

    def summary_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "classification", "achieved", "aux_m", "n"])
        for p in self.pairs:
            r = p["report"]
            w.writerow([p["i"], p["j"], p["classification"], repr(r.achieved), r.aux_m,
                        "" if r.n is None else " ".join(map(str, r.n))])
        return buf.getvalue()


def classify(sys, x, y, d, delta, box, M, max_points=kernels.DEFAULT_MAX_POINTS):
    try:
        rep = rp_witness(sys, x, y, d, delta, box, M, max_points)
    except BudgetExceeded as exc:
        return OVER_BUDGET, exc.best
    return (WITNESSED if rep.found else REFUTED), rep


def run_pairs(sys, points, pairs, d, delta, box, M, max_points, workers=1):
    """Classify index pairs concurrently; results come back in input order."""
    def job(ij):
        i, j = ij
        return classify(sys, points[i], points[j], d, delta, box, M, max_points)

    if workers <= 1:
        return [job(ij) for ij in pairs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(job, pairs))


def relation_scan(sys, sample, d, delta, box, M, pairs=None, max_points=kernels.DEFAULT_MAX_POINTS,
                  workers=1, max_probes=200):
    """Empirical audit of reflexivity, symmetry and transitivity of RP^[d].

    ``pairs`` (index pairs into ``sample``) defaults to every ordered pair
    of distinct points. Reverse pairs are classified as well so symmetry can
    be checked. Transitivity is probed at tolerance ``2*delta`` with box
    ``2*box`` for each witnessed chain (i, j), (j, k), never at ``delta``.
    """
    if len(set(sample)) != len(sample):
        raise ValueError("sample points must be pairwise distinct")
    n = len(sample)
    if pairs is None:
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    pairs = [tuple(p) for p in pairs]
    listed = set(pairs)
    extra = sorted({(j, i) for i, j in pairs if (j, i) not in listed and i != j})
    results = run_pairs(sys, sample, pairs + extra, d, delta, box, M, max_points, workers)
    cls = {ij: res for ij, res in zip(pairs + extra, results)}
    records = [{"i": i, "j": j, "classification": cls[(i, j)][0], "report": cls[(i, j)][1]}
               for i, j in pairs]
    violations = 0
    seen = set()
    for i, j in pairs:
        if i == j or frozenset((i, j)) in seen:
            continue
        seen.add(frozenset((i, j)))
        a, b = cls[(i, j)][0], cls[(j, i)][0]
        if {a, b} == {WITNESSED, REFUTED}:
            violations += 1
    witnessed = sorted(ij for ij, (c, _) in cls.items() if c == WITNESSED and ij[0] != ij[1])
    chains = []
    for i, j in witnessed:
        for j2, k in witnessed:
            if j2 == j and k != i:
                chains.append((i, j, k))
    chains = sorted(set(chains))[:max_probes]
    probe_pairs = [(i, k) for i, _, k in chains]
    probe_res = run_pairs(sys, sample, probe_pairs, d, 2 * delta, 2 * box, M, max_points, workers)
    probes = [{"triple": list(t), "outcome": c, "report": r} for t, (c, r) in zip(chains, probe_res)]
    budget = {"d": d, "delta": delta, "box": box, "M": M, "probe_delta": 2 * delta, "probe_box": 2 * box}
    return RelationReport(records, violations, probes, budget)
