"""Compare the numba and numpy lattice-scan backends on representative searches.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each workload runs once per backend to warm up (numba compiles on first
call), then ``--repeat`` times; the best wall time is reported together
with a check that both backends return identical results.
"""
import argparse
import time

from cubelab import kernels
from cubelab.combinatorics import Arc, cube_set, visit_set
from cubelab.cubes import CubeConfiguration, return_times
from cubelab.rp import rp_witness
from cubelab.systems import chacon, golden_rotation, golden_skew, torus_point


def skew_fiber_pair():
    s = golden_skew()
    rep = rp_witness(s, torus_point(0, 0), torus_point(0, "0.5"), 1, 1e-2, 10 ** 4, 10 ** 4)
    return rep.to_json()


def skew_refuted_d2():
    s = golden_skew()
    rep = rp_witness(s, torus_point(0, 0), torus_point("0.3", "0.6"), 2, 1e-2, 500, 500)
    return rep.to_json()


def chacon_d3():
    c = chacon()
    x, y = c.make_point(5), c.make_point(80000)
    return rp_witness(c, x, y, 3, 0.0625, 60, 60).to_json()


def skew_return_times():
    s = golden_skew()
    diag = CubeConfiguration.diagonal(torus_point(0, 0), 2)
    return return_times(s, diag, diag, 400, 0.05).as_set()


def bohr_cube_set_d3():
    S = visit_set(golden_rotation(), torus_point(0), Arc(0, "1/4"), 300)
    return cube_set(S, 3, 40).as_set()


WORKLOADS = [
    ("rp_witness skew fiber pair, d=1, box=M=1e4", skew_fiber_pair),
    ("rp_witness skew separated pair, d=2, box=M=500", skew_refuted_d2),
    ("rp_witness Chacon pair, d=3, box=M=60", chacon_d3),
    ("return_times skew diagonal, d=2, box=400", skew_return_times),
    ("cube_set Bohr set, d=3, box=40", bohr_cube_set_d3),
]


def best_time(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    names = [b for b in ("numba", "numpy") if b in kernels.available_backends()]
    print(f"{'workload':50s} " + " ".join(f"{b:>10s}" for b in names) + "   speedup  same")
    for label, fn in WORKLOADS:
        times, results = [], []
        for b in names:
            with kernels.use_backend(b):
                fn()
                t, r = best_time(fn, args.repeat)
            times.append(t)
            results.append(r)
        speed = f"{times[1] / times[0]:8.1f}x" if len(times) == 2 else "       -"
        same = all(r == results[0] for r in results)
        print(f"{label:50s} " + " ".join(f"{t:9.3f}s" for t in times) + f"  {speed}  {same}")


if __name__ == "__main__":
    main()
