"""The six configurable experiments behind ``cubelab run``.

Each experiment takes a validated parameter dict and returns an
:class:`Outcome`: a JSON-ready report, CSV summary rows, extra CSV files and
a list of checks. A check is ``hard`` (a mathematical certainty whose
failure means a bug) or ``evidence`` (a finite-budget expectation).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import fixedpoint as fx
from . import rp as rpmod
from .combinatorics import (Whole, covering_radius, cube_set, neighborhood_from_json,
                            visit_set)
from .cubes import CubeConfiguration, cube_approach, face_act, return_times
from .errors import BudgetExceeded, InvariantViolation
from .factors import lift_rp, lifted_pair, nilfactor_check, push_rp
from .systems import FactorMap, SkewProduct, SturmianSubshift, TorusPoint

EXPERIMENTS = ("rp-scan", "cube-return", "syndetic", "lift", "nilcheck", "prox-fs")


@dataclass
class Check:
    name: str
    passed: bool
    kind: str  # "hard" or "evidence"
    detail: str = ""

    def line(self):
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} [{self.kind}] {self.detail}".rstrip()

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "kind": self.kind, "detail": self.detail}


@dataclass
class Outcome:
    report: dict
    header: list
    rows: list
    checks: list
    files: dict = field(default_factory=dict)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------------- samples

def random_sample(sys, rng, count, min_separation=0.0, max_tries=100000):
    """``count`` seeded points, each farther than ``min_separation`` from the rest."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries:
            raise ValueError(f"could not place {count} points {min_separation} apart")
        p = sys.random_point(rng)
        if all(sys.distance(p, q) > min_separation for q in out):
            out.append(p)
    return out


def fiber_design(sys, rng, delta, fibers=5, per_fiber=3, n_pairs=100):
    """Skew-product grid with exact fiber pairs, boundary pairs and off-fiber pairs.

    Each fiber holds ``per_fiber`` points sharing a first coordinate plus one
    point whose first coordinate is offset by ``t`` in ``[delta/2, 2 delta]``.
    Every within-fiber pair is listed, then seeded off-fiber pairs fill the
    list to ``n_pairs``.
    """
    if not isinstance(sys, SkewProduct):
        raise ValueError("fiber_design needs a SkewProduct")
    pts, fid = [], []
    for f in range(fibers):
        u = rng.fraction()
        for _ in range(per_fiber):
            pts.append(TorusPoint((u, rng.fraction())))
            fid.append(f)
        t = rng.fraction_in(delta / 2, 2 * delta)
        pts.append(TorusPoint((u + t, rng.fraction())))
        fid.append(f)
    n = len(pts)
    same = [(i, j) for i in range(n) for j in range(i + 1, n) if fid[i] == fid[j]]
    other = [(i, j) for i in range(n) for j in range(i + 1, n) if fid[i] != fid[j]]
    need = max(0, n_pairs - len(same))
    chosen = []
    pool = list(other)
    while len(chosen) < need and pool:
        chosen.append(pool.pop(rng.integer(0, len(pool) - 1)))
    return pts, same + sorted(chosen)


def separated_pairs(sys, rng, off_fiber, same_fiber, delta):
    """Skew-product pairs 4 delta apart: distinct fibers, or one fiber with far second coordinates."""
    pts, pairs = [], []
    while len(pairs) < off_fiber:
        a, b = sys.random_point(rng), sys.random_point(rng)
        if fx.circle_distance(a.coords[0], b.coords[0]) > 4 * delta:
            pairs.append((len(pts), len(pts) + 1))
            pts += [a, b]
    while len(pairs) < off_fiber + same_fiber:
        a = sys.random_point(rng)
        b = TorusPoint((a.coords[0], rng.fraction()))
        if sys.distance(a, b) > 4 * delta:
            pairs.append((len(pts), len(pts) + 1))
            pts += [a, b]
    return pts, pairs


def asymptotic_pairs(sys, rng, count, spread=100000):
    """Lower/upper Sturmian codings of phases on the orbit of 0."""
    if not isinstance(sys, SturmianSubshift):
        raise ValueError("asymptotic pairs need a SturmianSubshift")
    out = []
    for _ in range(count):
        phase = (rng.integer(-spread, spread) * sys.alpha) & fx.MASK
        out.append((sys.coding(phase, "lower"), sys.coding(phase, "upper")))
    return out


def build_sample(sys, spec, rng, delta):
    """Resolve a ``points`` spec to ``(points, pairs or None)``."""
    if isinstance(spec, list):
        return [sys.point_from_json(p) for p in spec], None
    if "random" in spec:
        return random_sample(sys, rng, int(spec["random"]), float(spec.get("min_separation", 0.0))), None
    if "random_pairs" in spec:
        k = int(spec["random_pairs"])
        return random_sample(sys, rng, 2 * k, float(spec.get("min_separation", 0.0))), \
            [(2 * i, 2 * i + 1) for i in range(k)]
    if "fiber_design" in spec:
        o = spec["fiber_design"]
        return fiber_design(sys, rng, delta, int(o.get("fibers", 5)), int(o.get("per_fiber", 3)),
                            int(o.get("pairs", 100)))
    if "separated_pairs" in spec:
        o = spec["separated_pairs"]
        return separated_pairs(sys, rng, int(o.get("off_fiber", 25)), int(o.get("same_fiber", 25)), delta)
    raise ValueError(f"unrecognized points spec {spec!r}")


# -------------------------------------------------------------- experiments

def _fiber_close(sys, p, q, delta):
    return fx.circle_distance(p.coords[0], q.coords[0]) < delta


def run_rp_scan(sys, P, rng, workers):
    d, delta, box, M = P["d"], P["delta"], P["box"], P["M"]
    pts, design_pairs = build_sample(sys, P["points"], rng, delta)
    pairs = P.get("pairs")
    if isinstance(pairs, int):
        n = len(pts)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)][:pairs]
    pairs = pairs or design_pairs
    rel = rpmod.relation_scan(sys, pts, d, delta, box, M, pairs, P["max_points"], workers, P["max_probes"])
    checks = []
    listed = [(r["i"], r["j"]) for r in rel.pairs]
    off = [r for r in rel.pairs if r["i"] != r["j"]]
    # exact refutation for isometries: d(x, y) > 2 delta rules out every witness
    if sys.isometric:
        sep = all(sys.distance(pts[r["i"]], pts[r["j"]]) > 2 * delta for r in off)
        bad = [r for r in off if r["classification"] == rpmod.WITNESSED
               and sys.distance(pts[r["i"]], pts[r["j"]]) > 2 * delta]
        checks.append(Check("isometry-refutation", not bad, "hard", f"{len(bad)} separated pairs witnessed"))
        lower = all(r["report"].achieved >= sys.distance(pts[r["i"]], pts[r["j"]]) - 2 * delta
                    for r in off if r["classification"] == rpmod.REFUTED)
        checks.append(Check("isometry-bound", lower, "hard", "achieved >= distance - 2 delta"))
        if sep and rel.refuted == len(off):
            rel.verdict = "all refuted (exact)"
    if rel.verdict is None:
        rel.verdict = f"{rel.witnessed}/{len(rel.pairs)} witnessed"
    checks.append(Check("symmetry", rel.symmetry_violations == 0, "evidence",
                        f"{rel.symmetry_violations} violations"))
    tp = rel.transitivity_probes
    ok = sum(1 for t in tp if t["outcome"] == rpmod.WITNESSED)
    checks.append(Check("transitivity", ok == len(tp), "evidence", f"{ok}/{len(tp)} probes witnessed"))
    frac = rel.witnessed / max(1, len(rel.pairs))
    if P.get("min_witnessed") is not None:
        checks.append(Check("witnessed-fraction", frac >= P["min_witnessed"], "evidence",
                            f"{rel.witnessed}/{len(rel.pairs)} witnessed (need {P['min_witnessed']:.0%})"))
    if P.get("max_witnessed") is not None:
        checks.append(Check("witnessed-count", rel.witnessed <= P["max_witnessed"], "evidence",
                            f"{rel.witnessed} witnessed (allow {P['max_witnessed']})"))
    report = rel.to_json()
    if P["fiber_oracle"]:
        agree, dis = 0, []
        for r in rel.pairs:
            p, q = pts[r["i"]], pts[r["j"]]
            pred = _fiber_close(sys, p, q, delta)
            got = r["classification"] == rpmod.WITNESSED
            if pred == got:
                agree += 1
            else:
                t = fx.circle_distance(p.coords[0], q.coords[0])
                dis.append({"i": r["i"], "j": r["j"], "fiber_distance": t,
                            "boundary": delta / 2 <= t <= 2 * delta, "predicate": pred, "witnessed": got})
        rate = agree / max(1, len(rel.pairs))
        boundary_only = all(x["boundary"] for x in dis)
        report["fiber_oracle"] = {"agreement": rate, "disagreements": dis}
        checks.append(Check("fiber-agreement", rate >= P["min_agreement"] and boundary_only, "evidence",
                            f"agreement {rate:.3f} (need {P['min_agreement']}), "
                            f"{sum(not x['boundary'] for x in dis)} non-boundary disagreements"))
    report["points"] = [sys.point_to_json(p) for p in pts]
    report["pairs_listed"] = [list(p) for p in listed]
    header = ["i", "j", "classification", "achieved", "aux_m", "n"]
    rows = [[r["i"], r["j"], r["classification"], repr(r["report"].achieved), r["report"].aux_m,
             "" if r["report"].n is None else " ".join(map(str, r["report"].n))] for r in rel.pairs]
    return Outcome(report, header, rows, checks)


def run_nilcheck(sys, P, rng, workers):
    d, delta, box, M = P["d"], P["delta"], P["box"], P["M"]
    pts, _ = build_sample(sys, P["points"], rng, delta)
    rel = nilfactor_check(sys, d, pts, delta, box, M, P["max_points"], workers, P["max_probes"])
    checks = []
    if sys.isometric:
        checks.append(Check("isometry-refutation", rel.witnessed == 0, "hard",
                            f"{rel.witnessed} witnessed pairs"))
    expect = P.get("expect")
    if expect is not None:
        want = {"consistent": f"order {d} consistent", "not": "not order d".replace("d", str(d))}[expect]
        checks.append(Check("nilfactor-verdict", rel.verdict == want, "evidence",
                            f"verdict {rel.verdict!r}, expected {want!r}"))
    report = rel.to_json()
    report["points"] = [sys.point_to_json(p) for p in pts]
    header = ["i", "j", "classification", "achieved"]
    rows = [[r["i"], r["j"], r["classification"], repr(r["report"].achieved)] for r in rel.pairs]
    return Outcome(report, header, rows, checks)


def sample_q2(sys, x, rng, spread=10 ** 6):
    """A point of Q^[2][x]: the face orbit of ``(x, y, y, y)`` with ``y`` on the fiber of ``x``."""
    y = TorusPoint((x.coords[0], rng.fraction())) if isinstance(sys, SkewProduct) else sys.random_point(rng)
    n0 = (rng.integer(-spread, spread), rng.integer(-spread, spread))
    return face_act(sys, CubeConfiguration(2, (x, y, y, y)), n0)


def run_cube_return(sys, P, rng, workers):
    d, delta, box = P["d"], P["delta"], P["box"]
    x = sys.point_from_json(P["point"])
    diag = CubeConfiguration.diagonal(x, d)
    rt = return_times(sys, diag, diag, box, delta)
    margin = P["margin"] if P.get("margin") is not None else box // 4
    gap = covering_radius(rt, box, margin, d)
    checks = [Check("return-times-nonempty", len(rt) > 0, "evidence", f"{len(rt)} hits"),
              Check("return-times-syndetic", gap.syndetic_evidence, "evidence",
                    f"covering radius {gap.to_json()['radius']} vs margin {margin}")]
    checks.append(Check("diagonal-in-return-set", (0,) * d in rt, "hard", "n = 0 returns exactly"))
    approaches = []
    if P["approach_samples"]:
        if d != 2:
            raise ValueError("approach sampling is implemented for d = 2")
        target = CubeConfiguration.diagonal(x, 2)
        for _ in range(P["approach_samples"]):
            z = sample_q2(sys, x, rng)
            try:
                rep = cube_approach(sys, z, target, P["approach_box"], delta, P["max_points"])
            except BudgetExceeded as exc:
                rep = exc.best
            approaches.append({"z": [sys.point_to_json(c) for c in z.coords], **rep.to_json()})
        ok = sum(a["found"] for a in approaches)
        checks.append(Check("cube-approach", ok == len(approaches), "evidence",
                            f"{ok}/{len(approaches)} approaches found"))
    report = {"hits": len(rt), "gap": gap.to_json(), "approaches": approaches,
              "point": sys.point_to_json(x)}
    files = {"return_times.csv": _csv_text(None, [list(p) + [repr(float(v))]
                                                  for p, v in zip(rt.points.tolist(), rt.values)])}
    rows = [len(rt), gap.to_json()["radius"], margin,
            sum(a["found"] for a in approaches), len(approaches)]
    return Outcome(report, ["hits", "covering_radius", "margin", "approaches_found", "approaches"],
                   [rows], checks, files)


def brute_cube_set(S, d, box):
    """Direct enumeration oracle for cube_set."""
    members = set(S.entries.tolist())
    axes = np.arange(-box, box + 1)
    grid = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), -1).reshape(-1, d)
    keep = []
    for n in grid.tolist():
        ok = True
        for e in range(1, 1 << d):
            if sum(v for i, v in enumerate(n) if e >> i & 1) not in members:
                ok = False
                break
        if ok:
            keep.append(tuple(n))
    return set(keep)


def brute_covering_radius(C, box, margin, d):
    """Nearest-point oracle for the covering radius (None when C misses the inner box)."""
    pts = np.array(sorted(C), dtype=np.int64).reshape(-1, d)
    inner = box - margin
    if not len(pts) or not np.any(np.all(np.abs(pts) <= inner, axis=1)):
        return None
    axes = np.arange(-inner, inner + 1)
    zs = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), -1).reshape(-1, d)
    best = 0
    for s in range(0, len(zs), 4096):
        blk = zs[s:s + 4096]
        dist = np.abs(blk[:, None, :] - pts[None, :, :]).max(axis=2).min(axis=1)
        best = max(best, int(dist.max()))
    return best


def run_syndetic(sys, P, rng, workers):
    x = sys.point_from_json(P["point"])
    U = neighborhood_from_json(P["neighborhood"]) if P.get("neighborhood") else Whole()
    S = visit_set(sys, x, U, P["M"])
    checks = [Check("visit-set-contains-0", S.contains_base or not _contains(sys, U, x), "hard",
                    f"{len(S)} visits in [-{P['M']}, {P['M']}]")]
    cubes, rows, files = [], [], {"visit_set.csv": _csv_text(None, [[v] for v in S.entries.tolist()])}
    for c in P["cubes"]:
        d, box = c["d"], c["box"]
        margin = c.get("margin", box // 4)
        C = cube_set(S, d, box)
        gap = covering_radius(C, box, margin, d)
        entry = {"d": d, "box": box, "margin": margin, "size": len(C), "gap": gap.to_json()}
        if P["oracle"]:
            oracle_set = brute_cube_set(S, d, box)
            same = oracle_set == C.as_set()
            r = brute_covering_radius(oracle_set, box, margin, d)
            entry["oracle_radius"] = "infinite" if r is None else r
            checks.append(Check(f"cube-set-oracle-d{d}", same, "hard", f"{len(C)} points"))
            checks.append(Check(f"covering-radius-oracle-d{d}", r == gap.covering_radius, "hard",
                                f"radius {entry['gap']['radius']} vs oracle {entry['oracle_radius']}"))
        checks.append(Check(f"finite-radius-d{d}", not gap.infinite, "evidence",
                            f"radius {entry['gap']['radius']}"))
        cubes.append(entry)
        rows.append([d, box, margin, len(C), entry["gap"]["radius"], gap.syndetic_evidence])
        files[f"cube_set_d{d}.csv"] = _csv_text(None, C.points.tolist())
    report = {"visits": len(S), "origin": S.origin, "cubes": cubes}
    return Outcome(report, ["d", "box", "margin", "size", "covering_radius", "syndetic_evidence"],
                   rows, checks, files)


def _contains(sys, U, x):
    return visit_set(sys, x, U, 0).contains_base


def run_lift(sys, P, rng, workers):
    f = _factor(sys, P["factor"])
    d, delta, box, M = P["d"], P["delta"], P["box"], P["M"]
    down = random_sample(f.target, rng, P["pairs"])
    lifts, rows = [], []
    lip_ok, lift_ok = 0, 0
    for i, x in enumerate(down):
        y = x if P["pair_mode"] == "diagonal" else _nudge(f.target, x, delta / 4)
        entry = {"index": i, "downstairs": [f.target.point_to_json(x), f.target.point_to_json(y)]}
        try:
            rep = lift_rp(f, x, y, d, delta, box, M, P["grid_bits"], P["min_separation"],
                          P["max_candidates"], P["max_points"], workers)
        except BudgetExceeded as exc:
            entry["lift"] = exc.best.to_json()
            lifts.append(entry)
            rows.append([i, False, "", ""])
            continue
        lift_ok += 1
        X, Y = lifted_pair(f, rep)
        entry["lift"] = rep.to_json()
        push = push_rp(f, X, Y, d, delta, box, M, witness=rep)
        lip_ok += 1  # push_rp raises InvariantViolation otherwise
        entry["push"] = push.to_json()
        rt = f.target.distance(f.target.point_from_json(push.extra["pair"][0]), x)
        entry["round_trip_error"] = rt
        lifts.append(entry)
        rows.append([i, True, repr(rep.achieved), repr(push.achieved)])
    n = len(down)
    checks = [Check("push-lipschitz", lip_ok == lift_ok, "hard", f"{lip_ok}/{lift_ok} replays"),
              Check("lift-found", lift_ok == n, "evidence", f"{lift_ok}/{n} lifts")]
    report = {"factor": f.to_json(), "lifts": lifts}
    return Outcome(report, ["index", "lifted", "upstairs_achieved", "downstairs_achieved"], rows, checks)


def _nudge(sys, x, eps):
    """A point within ``eps`` of ``x`` (torus systems and their products)."""
    if isinstance(x, TorusPoint):
        return TorusPoint(tuple(c + int(eps * fx.ONE) for c in x.coords))
    if hasattr(x, "left"):
        return type(x)(_nudge(sys.left, x.left, eps), _nudge(sys.right, x.right, eps))
    raise ValueError("near pairs need torus coordinates")


def _factor(sys, kind):
    if kind == "SkewToRotation":
        return FactorMap.skew_to_rotation(sys)
    if kind == "ProductToLeft":
        return FactorMap.product_to_left(sys)
    if kind == "ProductToRight":
        return FactorMap.product_to_right(sys)
    if kind == "Identity":
        return FactorMap(sys, sys, "Identity")
    raise ValueError(f"unknown factor kind {kind!r}")


def run_prox_fs(sys, P, rng, workers):
    delta, N = P["delta"], P["N"]
    pairs = asymptotic_pairs(sys, rng, P["pairs"], P["spread"])
    records, rows = [], []
    fs_ok = replay_ok = total = 0
    for i, (x, y) in enumerate(pairs):
        prox = rpmod.prox_witness(sys, x, y, delta, N)
        rec = {"index": i, "pair": [sys.point_to_json(x), sys.point_to_json(y)],
               "proximal_hits": len(prox.hits), "closest": prox.achieved, "dims": []}
        for d in P["dims"]:
            total += 1
            gens = rpmod.fs_in_set(prox.hits, d)
            item = {"d": d, "generators": None if gens is None else list(gens)}
            if gens is not None:
                fs_ok += 1
                val = rpmod.rp_condition(sys, x, y, gens, 0)
                item["replay"] = val
                item["accepted"] = val < delta
                replay_ok += val < delta
            rec["dims"].append(item)
            rows.append([i, d, "" if gens is None else " ".join(map(str, gens)),
                         repr(item.get("replay", math.inf))])
        records.append(rec)
    checks = [Check("fs-found", fs_ok == total, "evidence", f"{fs_ok}/{total}"),
              Check("fs-replay", replay_ok == fs_ok, "hard", f"{replay_ok}/{fs_ok} accepted at delta")]
    return Outcome({"pairs": records}, ["index", "d", "generators", "replay"], rows, checks)


RUNNERS = {
    "rp-scan": run_rp_scan,
    "nilcheck": run_nilcheck,
    "cube-return": run_cube_return,
    "syndetic": run_syndetic,
    "lift": run_lift,
    "prox-fs": run_prox_fs,
}


def run(experiment, sys, params, seed, workers=1):
    rng = fx.LCG(seed)
    try:
        return RUNNERS[experiment](sys, params, rng, workers)
    except InvariantViolation as exc:
        return Outcome({"error": str(exc)}, [], [], [Check("invariant", False, "hard", str(exc))])
