"""RP^[d] across factor maps: pushing witnesses down, lifting pairs up, and
testing whether a system looks like a system of order d.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from . import fixedpoint as fx
from . import kernels
from .errors import BudgetExceeded, InvariantViolation, KindMismatch
from .rp import REFUTED, WITNESSED, WitnessReport, relation_scan, rp_condition, rp_witness
from .systems import (Product, ProductPoint, SturmianSubshift, SubstitutionSubshift,
                      TorusPoint, factor_project)

DEFAULT_GRID_BITS = 6


def push_rp(f, x, y, d, delta, box, M, witness=None, max_points=kernels.DEFAULT_MAX_POINTS):
    """Replay an upstairs witness on the projected pair.

    The witness ``(m, n)`` is searched for when not supplied. Both sides are
    replayed with exact arithmetic; since the projection is 1-Lipschitz and
    equivariant the downstairs value can never exceed the upstairs one, and
    :class:`InvariantViolation` is raised if it does.
    """
    if witness is None:
        witness = rp_witness(f.source, x, y, d, delta, box, M, max_points)
    if not witness.found:
        raise ValueError("push_rp needs an upstairs pair witnessed at the given budget")
    n, m = witness.n, witness.aux_m
    up = rp_condition(f.source, x, y, n, m)
    px, py = factor_project(f, x), factor_project(f, y)
    down = rp_condition(f.target, px, py, n, m)
    if down > up:
        raise InvariantViolation(f"projected replay {down} exceeds upstairs replay {up}")
    budget = {"d": d, "delta": delta, "box": box, "M": M}
    return WitnessReport(down < delta, n, m, down, budget, n, m,
                         extra={"upstairs_achieved": up, "factor": f.kind,
                                "pair": [f.target.point_to_json(px), f.target.point_to_json(py)]})


# ----------------------------------------------------------------------- lifts

def fiber_grid(sys, k=DEFAULT_GRID_BITS):
    """``2**k`` representatives spread over ``sys`` (equispaced where possible)."""
    N = 1 << k
    step = fx.ONE // N
    if hasattr(sys, "dim"):
        return [TorusPoint((i * step,) * sys.dim) for i in range(N)]
    if isinstance(sys, SturmianSubshift):
        return [sys.coding(i * step) for i in range(N)]
    if isinstance(sys, SubstitutionSubshift):
        return [sys.make_point(i * 1009) for i in range(N)]
    if isinstance(sys, Product):
        return [ProductPoint(a, b) for a, b in zip(fiber_grid(sys.left, k), fiber_grid(sys.right, k))]
    raise KindMismatch(f"no fiber grid for {sys.kind}")


def fiber(f, p, k=DEFAULT_GRID_BITS):
    """Grid of points of ``f.source`` projecting exactly onto ``p``."""
    if f.kind == "Identity":
        return [p]
    if f.kind == "SkewToRotation":
        step = fx.ONE >> k
        return [TorusPoint((p.coords[0], i * step)) for i in range(1 << k)]
    if f.kind == "ProductToLeft":
        return [ProductPoint(p, c) for c in fiber_grid(f.source.right, k)]
    if f.kind == "ProductToRight":
        return [ProductPoint(c, p) for c in fiber_grid(f.source.left, k)]
    raise KindMismatch(f"unknown factor kind {f.kind!r}")


def candidate_order(N):
    """Index pairs (i, j) ordered by cyclic offset 0, 1, -1, 2, ... then by i."""
    offsets = [0]
    for o in range(1, N // 2 + 1):
        offsets += [o, -o] if o != N - o else [o]
    return [(i, (i + o) % N) for o in offsets for i in range(N)]


def lift_rp(f, x, y, d, delta, box, M, k=DEFAULT_GRID_BITS, min_separation=0.0,
            max_candidates=256, max_points=kernels.DEFAULT_MAX_POINTS, workers=1):
    """Find an upstairs witnessed pair over a downstairs witnessed pair.

    Candidates come from fiber grids over ``x`` and ``y`` (see
    :func:`candidate_order`); pairs closer than ``min_separation`` upstairs
    are skipped. The first witnessed candidate in canonical order is
    returned. Running out of candidates raises :class:`BudgetExceeded` whose
    report is flagged inconclusive: a grid can miss lifts that exist.
    """
    down = rp_witness(f.target, x, y, d, delta, box, M, max_points)
    if not down.found:
        raise ValueError("lift_rp needs a downstairs pair witnessed at the given budget")
    fx_, fy_ = fiber(f, x, k), fiber(f, y, k)
    cands = [(i, j) for i, j in candidate_order(len(fx_))
             if f.source.distance(fx_[i], fy_[j]) >= min_separation][:max_candidates]
    budget = {"d": d, "delta": delta, "box": box, "M": M, "grid_bits": k,
              "min_separation": min_separation, "max_candidates": max_candidates}

    def job(ij):
        i, j = ij
        try:
            return rp_witness(f.source, fx_[i], fy_[j], d, delta, box, M, max_points)
        except BudgetExceeded as exc:
            return exc.best

    best = None
    step = max(1, workers)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for s in range(0, len(cands), step):
            batch = cands[s:s + step]
            reps = list(pool.map(job, batch)) if pool else [job(ij) for ij in batch]
            for (i, j), rep in zip(batch, reps):
                X, Y = fx_[i], fy_[j]
                if best is None or rep.achieved < best[0].achieved:
                    best = (rep, (i, j), X, Y)
                if rep.found:
                    err = max(f.target.distance(factor_project(f, X), x),
                              f.target.distance(factor_project(f, Y), y))
                    if not err < delta:
                        raise InvariantViolation(f"lift projects {err} away from the pair")
                    extra = {"candidate": [i, j], "tried": s + batch.index((i, j)) + 1,
                             "projection_error": err,
                             "upstairs_pair": [f.source.point_to_json(X), f.source.point_to_json(Y)],
                             "downstairs": down.to_json()}
                    return WitnessReport(True, rep.n, rep.aux_m, rep.achieved, budget,
                                         rep.n, rep.aux_m, extra=extra)
    finally:
        if pool:
            pool.shutdown()
    extra = {"inconclusive": True, "tried": len(cands), "downstairs": down.to_json()}
    if best is not None:
        rep, ij, X, Y = best
        extra.update(candidate=list(ij),
                     upstairs_pair=[f.source.point_to_json(X), f.source.point_to_json(Y)])
        report = WitnessReport(False, None, None, rep.achieved, budget, rep.best_n, rep.best_m, extra=extra)
    else:
        report = WitnessReport(False, None, None, float("inf"), budget, extra=extra)
    raise BudgetExceeded(f"no witnessed lift among {len(cands)} fiber candidates (inconclusive)", report)


def lifted_pair(f, report):
    """Upstairs points recorded in a :func:`lift_rp` report."""
    a, b = report.extra["upstairs_pair"]
    return f.source.point_from_json(a), f.source.point_from_json(b)


# ------------------------------------------------------------------ nilfactors

def nilfactor_check(sys, d, sample, delta, box, M, max_points=kernels.DEFAULT_MAX_POINTS,
                    workers=1, max_probes=50):
    """Audit whether RP^[d] looks trivial on a separated sample.

    Any witnessed pair is evidence the system is not of order d; all pairs
    refuted is evidence consistent with order d (exact for isometries,
    where separation > 2 delta rules out every witness, and the report's
    ``exact`` flag says so).
    """
    for i in range(len(sample)):
        for j in range(i):
            if not sys.distance(sample[i], sample[j]) > 4 * delta:
                raise ValueError(f"sample points {j} and {i} are not 4*delta separated")
    pairs = [(i, j) for i in range(len(sample)) for j in range(i + 1, len(sample))]
    rel = relation_scan(sys, sample, d, delta, box, M, pairs, max_points, workers, max_probes)
    classes = [p["classification"] for p in rel.pairs]
    if WITNESSED in classes:
        verdict = "not order d"
    elif all(c == REFUTED for c in classes):
        verdict = "order d consistent"
    else:
        verdict = "inconclusive at budget"
    rel.verdict = verdict.replace("order d", f"order {d}")
    rel.exact = sys.isometric and verdict == "order d consistent"
    return rel
