#!/usr/bin/env python3
"""Benchmark the pure-Python kernel backend against the compiled one.

Times each hot kernel on pre-generated random inputs and reports the
per-call cost and speedup, then times a whole closed-loop episode under
each backend (episodes re-import the package in a subprocess because the
backend is fixed at import time).

Usage: python benchmarks/bench_kernels.py [--repeat N] [--calls N]
"""

import argparse
import math
import subprocess
import sys
import time

import numpy as np

from forcecompass._kernels import _pure

try:
    from forcecompass._kernels import _core
except ImportError:
    _core = None


def _inputs(rng, calls):
    """Pre-draw argument tuples for every kernel so timing excludes RNG."""
    tops = tuple(float(v) for v in rng.uniform(0.01, 1e9, size=64))
    mk = {}
    mk["wrap_angle"] = [(float(a),) for a in rng.uniform(-50, 50, size=calls)]
    mk["rot_apply"] = [
        (tuple(float(v) for v in rng.normal(size=9)), *map(float, rng.normal(size=3)))
        for _ in range(calls)
    ]
    mk["cue_step"] = [
        (float(rng.normal() * 5), float(rng.normal() * 5), 0.02, 1.0, 0.05,
         float(rng.uniform(-math.pi, math.pi)))
        for _ in range(calls)
    ]
    mk["baseline_step"] = [
        (*map(float, rng.normal(size=3)), int(rng.integers(0, 2)),
         float(rng.uniform(0, 1)), float(abs(rng.normal() * 3)),
         *map(float, rng.normal(size=3)), float(rng.uniform(0, 10)), 2.0, 0.2)
        for _ in range(calls)
    ]
    mk["rotor_step"] = [
        (float(rng.uniform(-math.pi, math.pi)), float(rng.uniform(-math.pi, math.pi)),
         600 * math.pi / 180, 0.02)
        for _ in range(calls)
    ]
    mk["bend_torque"] = [tuple(map(float, rng.normal(size=12))) for _ in range(calls)]
    mk["insertion_tick"] = [
        (float(rng.normal() * 0.004), float(rng.normal() * 0.004),
         float(0.09 + rng.normal() * 0.02), float(rng.normal() * 0.002),
         int(rng.integers(0, 2)), 0.09, 0.0035, 0.0006, 0.003,
         5000.0, 0.4, 6.0, 1.5, 0.0, 0.0, 0.012, 0.19)
        for _ in range(calls)
    ]
    mk["probe_tick"] = [
        (float(rng.normal() * 0.03), float(rng.normal() * 0.03),
         float(0.11 + rng.normal() * 0.02), float(rng.normal() * 0.002),
         0.11, 0.05, 0.01, 8, tops, 0.04, 2000.0, 0.4, 30.0, 1.5, 0.19)
        for _ in range(calls)
    ]
    return mk


def _time_kernel(fn, arglist, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for args in arglist:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best / len(arglist)


def _episode_wall(backend, episodes):
    """Wall time for whole episodes, run in a subprocess with the backend pinned."""
    code = (
        "import time\n"
        "from forcecompass import presets, episode\n"
        "from forcecompass.experts import make_expert\n"
        "cfg = presets.task_config('key'); pipe = presets.pipeline_config('key')\n"
        f"n = {episodes}\n"
        "t0 = time.perf_counter()\n"
        "for seed in range(n):\n"
        "    episode.run_episode(cfg, make_expert(cfg, seed), seed=seed,"
        " condition='C4', pipeline=pipe)\n"
        "print((time.perf_counter() - t0) / n)\n"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"FORCECOMPASS_BACKEND": backend, "PATH": "/usr/bin:/bin"},
        capture_output=True,
        text=True,
        check=True,
    )
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timing repeats (best-of)")
    ap.add_argument("--calls", type=int, default=20000, help="calls per repeat")
    ap.add_argument("--episodes", type=int, default=20, help="episodes for the end-to-end row")
    args = ap.parse_args(argv)

    if _core is None:
        print("compiled backend not built; run pip install -e . first", file=sys.stderr)
        return 1

    rng = np.random.default_rng(2024)
    inputs = _inputs(rng, args.calls)

    print(f"{'kernel':<16} {'pure ns/call':>14} {'compiled ns/call':>18} {'speedup':>9}")
    for name, arglist in inputs.items():
        tp = _time_kernel(getattr(_pure, name), arglist, args.repeat)
        tc = _time_kernel(getattr(_core, name), arglist, args.repeat)
        print(f"{name:<16} {tp * 1e9:>14.0f} {tc * 1e9:>18.0f} {tp / tc:>8.1f}x")

    ep_pure = _episode_wall("pure", args.episodes)
    ep_comp = _episode_wall("compiled", args.episodes)
    print(f"{'episode (key C4)':<16} {ep_pure * 1e3:>12.2f}ms {ep_comp * 1e3:>16.2f}ms "
          f"{ep_pure / ep_comp:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
