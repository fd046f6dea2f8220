"""``cubelab run <config.json> [--threads N] [--out DIR]``.

Exit status: 0 when every check passes, 1 when any hard or evidence check
fails, 2 on configuration or runtime errors (in which case nothing is
written to the output directory).
"""
from __future__ import annotations

import argparse
import json
import json.decoder
import json.scanner
import math
import os
import shutil
import sys
import tempfile

from . import __version__, kernels
from .errors import ConfigError, CubelabError
from .experiments import EXPERIMENTS, _csv_text, run
from .systems import system_from_json


# --------------------------------------------------------- located JSON parse

class LocatedDict(dict):
    """A JSON object that remembers where it started in the source text."""

    pos = 0
    text = ""

    def line_of(self, key=None):
        start = self.pos
        if key is not None:
            hit = self.text.find(json.dumps(key), self.pos)
            start = hit if hit >= 0 else start
        return self.text.count("\n", 0, start) + 1


class _LocatingDecoder(json.JSONDecoder):
    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None):
            s, end = s_and_end
            obj, new_end = json.decoder.JSONObject(s_and_end, strict, scan_once, None, None, memo)
            out = LocatedDict(obj)
            out.pos, out.text = end - 1, s
            return out, new_end

        self.parse_object = parse_object
        self.scan_once = json.scanner.py_make_scanner(self)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    try:
        obj = _LocatingDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(obj, LocatedDict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    return obj


# ------------------------------------------------------------------ validation

COMMON = {"d": (int, None), "delta": (float, None), "box": (int, None), "M": (int, None),
          "max_points": (int, kernels.DEFAULT_MAX_POINTS)}

SCHEMAS = {
    "rp-scan": {**COMMON, "points": ((list, dict), None), "pairs": ((list, int), []),
                "max_probes": (int, 200), "fiber_oracle": (bool, False), "min_agreement": (float, 0.95),
                "min_witnessed": (float, None), "max_witnessed": (int, None)},
    "nilcheck": {**COMMON, "points": ((list, dict), None), "max_probes": (int, 50), "expect": (str, None)},
    "cube-return": {"d": (int, None), "delta": (float, None), "box": (int, None), "point": (dict, None),
                    "margin": (int, None), "approach_samples": (int, 0), "approach_box": (int, 500),
                    "max_points": (int, kernels.DEFAULT_MAX_POINTS)},
    "syndetic": {"point": (dict, None), "neighborhood": (dict, None), "M": (int, None),
                 "cubes": (list, None), "oracle": (bool, True)},
    "lift": {**COMMON, "factor": (str, None), "pairs": (int, 20), "pair_mode": (str, "diagonal"),
             "grid_bits": (int, 6), "min_separation": (float, 0.0), "max_candidates": (int, 256)},
    "prox-fs": {"delta": (float, None), "N": (int, None), "pairs": (int, 20), "dims": (list, [1, 2, 3]),
                "spread": (int, 1000)},
}
OPTIONAL_NONE = {"margin", "expect", "neighborhood", "min_witnessed", "max_witnessed"}
CHOICES = {"expect": ("consistent", "not"), "pair_mode": ("diagonal", "near"),
           "factor": ("Identity", "SkewToRotation", "ProductToLeft", "ProductToRight")}


def _fail(path, obj, key, msg):
    line = obj.line_of(key) if isinstance(obj, LocatedDict) else 1
    raise ConfigError(f"{path}:{line}: {msg}")


def _typed(path, obj, key, want):
    v = obj[key]
    if want is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    ok = isinstance(v, want) and not (want is int and isinstance(v, bool))
    if not ok:
        names = want.__name__ if isinstance(want, type) else "/".join(t.__name__ for t in want)
        _fail(path, obj, key, f"{key!r} must be {names}, got {type(v).__name__}")
    if isinstance(v, float) and not math.isfinite(v):
        _fail(path, obj, key, f"{key!r} must be finite")
    return v


def validate_experiment(path, cfg):
    """Normalize one experiment config; raises ConfigError with a line number."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}:1: each experiment must be an object")
    allowed = {"experiment", "system", "seed", "parameters", "name", "out"}
    for k in cfg:
        if k not in allowed:
            _fail(path, cfg, k, f"unknown top-level field {k!r}")
    for k in ("experiment", "system", "parameters"):
        if k not in cfg:
            _fail(path, cfg, None, f"missing required field {k!r}")
    exp = cfg["experiment"]
    if exp not in EXPERIMENTS:
        _fail(path, cfg, "experiment", f"experiment must be one of {list(EXPERIMENTS)}, got {exp!r}")
    try:
        system = system_from_json(cfg["system"])
    except (ValueError, KeyError, TypeError) as exc:
        _fail(path, cfg, "system", f"invalid system: {exc}")
    seed = cfg.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        _fail(path, cfg, "seed", "seed must be an integer")
    params = cfg["parameters"]
    if not isinstance(params, dict):
        _fail(path, cfg, "parameters", "parameters must be an object")
    schema = SCHEMAS[exp]
    out = {}
    out_dir = cfg.get("out")
    if out_dir is not None and (not isinstance(out_dir, str) or not out_dir):
        _fail(path, cfg, "out", "'out' must be a nonempty string")
    if "out" in params:
        out_dir = params["out"]
        if not isinstance(out_dir, str) or not out_dir:
            _fail(path, params, "out", "'out' must be a nonempty string")
    for k in params:
        if k == "out":
            continue
        if k not in schema:
            _fail(path, params, k, f"unknown parameter {k!r} for {exp}")
    for k, (want, default) in schema.items():
        if k in params:
            v = _typed(path, params, k, want)
            if k in CHOICES and v not in CHOICES[k]:
                _fail(path, params, k, f"{k!r} must be one of {list(CHOICES[k])}")
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v < 0:
                _fail(path, params, k, f"{k!r} must be nonnegative")
            out[k] = v
        elif default is not None or k in OPTIONAL_NONE:
            out[k] = default
        else:
            _fail(path, params, None, f"missing parameter {k!r} for {exp}")
    if "delta" in out and not out["delta"] > 0:
        _fail(path, params, "delta", "delta must be positive")
    if "d" in out and not 1 <= out["d"] <= 8:
        _fail(path, params, "d", "d must lie in 1..8")
    if exp == "syndetic":
        for c in out["cubes"]:
            if not isinstance(c, dict) or not {"d", "box"} <= set(c):
                _fail(path, params, "cubes", "each cube entry needs integer 'd' and 'box'")
            if c["d"] * c["box"] > out["M"]:
                _fail(path, params, "cubes", f"box*d = {c['d'] * c['box']} exceeds M = {out['M']}")
    try:
        for key in ("point",):
            if key in out:
                system.point_from_json(out[key])
    except (ValueError, KeyError, TypeError) as exc:
        _fail(path, params, "point", f"invalid point: {exc}")
    return {"experiment": exp, "system": system, "seed": seed, "params": out,
            "name": cfg.get("name", exp), "out": out_dir}


def validate(path, cfg):
    if "suite" in cfg:
        if set(cfg) - {"suite", "out"}:
            _fail(path, cfg, sorted(set(cfg) - {"suite", "out"})[0], "a suite config only holds 'suite' and 'out'")
        if not isinstance(cfg["suite"], list) or not cfg["suite"]:
            _fail(path, cfg, "suite", "'suite' must be a nonempty list of experiments")
        plans = [validate_experiment(path, c) for c in cfg["suite"]]
    else:
        plans = [validate_experiment(path, cfg)]
    names = [p["name"] for p in plans]
    if len(set(names)) != len(names):
        _fail(path, cfg, None, "experiment names must be unique within a suite")
    return plans


# ----------------------------------------------------------------- execution

def _clean(v):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(v, float):
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item"):
        return _clean(v.item())
    return v


def execute(plans, workers):
    """Run plans; returns (report dict, summary csv text, verdict lines, files, exit code)."""
    results, summary_rows, lines, files = [], [], [], {}
    failed = False
    for plan in plans:
        out = run(plan["experiment"], plan["system"], plan["params"], plan["seed"], workers)
        results.append({
            "name": plan["name"], "experiment": plan["experiment"], "seed": plan["seed"],
            "system": plan["system"].to_json(), "parameters": plan["params"],
            "checks": [c.to_json() for c in out.checks], "report": out.report,
        })
        for c in out.checks:
            lines.append(f"{plan['name']}/{c.line()}")
            summary_rows.append([plan["name"], c.name, c.kind, "PASS" if c.passed else "FAIL", c.detail])
            failed = failed or not c.passed
        for fname, text in out.files.items():
            files[f"{plan['name']}.{fname}" if len(plans) > 1 else fname] = text
    report = {"cubelab_version": __version__, "experiments": results}
    text = json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"
    summary = _csv_text(["experiment", "check", "kind", "status", "detail"], summary_rows)
    return text, summary, lines, files, 1 if failed else 0


def write_outputs(out_dir, report, summary, lines, files):
    """Write everything into a staging directory, then move files into place."""
    os.makedirs(out_dir, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".cubelab-", dir=out_dir)
    try:
        payload = {"report.json": report, "summary.csv": summary, "verdict.txt": "\n".join(lines) + "\n",
                   **files}
        for name, text in payload.items():
            with open(os.path.join(stage, name), "w", newline="") as fh:
                fh.write(text)
        for name in payload:
            os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def threads_from(arg):
    if arg is not None:
        return arg
    env = os.environ.get("CUBELAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"CUBELAB_THREADS={env!r} is not an integer") from None
        if n < 1:
            raise ConfigError("CUBELAB_THREADS must be at least 1")
        return n
    return 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="cubelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment (or suite) config")
    p_run.add_argument("config")
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        workers = threads_from(args.threads)
        cfg = load_config(args.config)
        plans = validate(args.config, cfg)
        out_dir = args.out or cfg.get("out") or plans[0]["out"] or "cubelab-out"
        report, summary, lines, files, code = execute(plans, workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CubelabError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    write_outputs(out_dir, report, summary, lines, files)
    for line in lines:
        print(line)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
