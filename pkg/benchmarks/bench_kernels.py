"""Compare the compiled kernels against the pure-numpy fallback.

Each path runs in its own interpreter because the JIT switch is read at import
time.  Usage: ``python benchmarks/bench_kernels.py [--scale 1.0]``.
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from agpm import NUMBA_ENABLED
from agpm.cost import time_intersections
from agpm.exact import exact_count
from agpm.generators import erdos_renyi
from agpm.pattern import builtin_pattern, compile_plan
from agpm.rng import worker_generator
from agpm.sampling import NeighborSampler

scale = float(sys.argv[1])
jit = NUMBA_ENABLED
out = {"numba": jit}

def best(fn, reps=3):
    fn()  # warm-up (compilation, caches)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)

work = int(2e5 * scale)
sec, units = time_intersections(work)
out["merge_ns_per_unit"] = 1e9 * sec / units

g = erdos_renyi(int(400 * scale) or 50, 0.05, 1)
plan = compile_plan(builtin_pattern("4clique"))
sampler = NeighborSampler(g, plan)
n = int(2000 * scale) or 100
out["sample_us"] = 1e6 * best(lambda: sampler.batch(worker_generator(0, 0), n)) / n

small = erdos_renyi(int(150 * scale) or 40, 0.1, 2)
tri = compile_plan(builtin_pattern("triangle"))
out["exact_triangle_ms"] = 1e3 * best(lambda: exact_count(small, tri, 1))
print(json.dumps(out))
"""


def run(disable: bool, scale: float) -> dict:
    env = dict(os.environ)
    env["AGPM_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run([sys.executable, "-c", CHILD, str(scale)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="workload multiplier")
    args = ap.parse_args(argv)
    jit = run(False, args.scale)
    py = run(True, args.scale)
    print(f"{'metric':<22}{'numba':>14}{'fallback':>14}{'speedup':>10}")
    for key in ("merge_ns_per_unit", "sample_us", "exact_triangle_ms"):
        a, b = jit[key], py[key]
        print(f"{key:<22}{a:>14.4g}{b:>14.4g}{b / a:>9.1f}x")
    return jit, py


if __name__ == "__main__":
    main()
