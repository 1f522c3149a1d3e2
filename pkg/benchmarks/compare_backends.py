"""Benchmark the compiled inner-loop kernel against the numpy fallback.

Runs the same fixed-iteration subproblem workloads through both kernels
and reports per-iteration times and the speedup, plus one end-to-end
solver run per backend.  Usage::

    python benchmarks/compare_backends.py [--quick]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mshedge import ControlConfig, TwoStageConfig, gen_control, gen_two_stage
from mshedge import _prg_py

try:
    from mshedge import _prg
except ImportError:
    _prg = None


def _workload(inst, iters, seed=0):
    rng = np.random.default_rng(seed)
    x_base = rng.standard_normal((inst.m, inst.n))
    y_base = rng.standard_normal((inst.m, inst.n))
    r = float(np.sqrt(inst.n))
    lam = 0.99 * (np.sqrt(2.0) - 1.0) / (inst.mapping.lipschitz + r)
    warm = np.clip(x_base, inst.box.lower, inst.box.upper)
    return dict(
        args=(
            inst.mapping.matrices,
            inst.mapping.offsets,
            inst.box.lower,
            inst.box.upper,
            x_base,
            y_base,
            inst.space.probs,
            r,
            lam,
            0.0,  # unreachable tolerance: run exactly `iters` iterations
            iters,
        ),
        warm=warm,
    )


def _time_kernel(kernel, work, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        cand = np.ascontiguousarray(work["warm"].copy())
        proj = np.empty_like(cand)
        t0 = time.perf_counter()
        kernel.prg_solve(*work["args"], cand, proj)
        best = min(best, time.perf_counter() - t0)
    return best, cand


def bench_kernels(quick: bool) -> None:
    cases = [
        ("control 512x3", gen_control(ControlConfig(3, 3, 0, 0)), 2000),
        ("two-stage 10x20", gen_two_stage(TwoStageConfig(10, 10, 10, 1)), 2000),
        ("two-stage 50x40", gen_two_stage(TwoStageConfig(50, 20, 20, 2)), 500),
    ]
    if quick:
        cases = cases[:1]
    print(f"{'case':<18} {'iters':>6} {'numpy':>12} {'compiled':>12} {'speedup':>8}", flush=True)
    for name, inst, iters in cases:
        work = _workload(inst, iters)
        t_py, c_py = _time_kernel(_prg_py, work)
        if _prg is None:
            print(f"{name:<18} {iters:>6} {t_py * 1e3:>10.1f}ms {'n/a':>12} {'n/a':>8}")
            continue
        t_cy, c_cy = _time_kernel(_prg, work)
        drift = float(np.abs(c_py - c_cy).max())
        print(
            f"{name:<18} {iters:>6} {t_py * 1e3:>10.1f}ms {t_cy * 1e3:>10.1f}ms "
            f"{t_py / t_cy:>7.1f}x  (max iterate drift {drift:.1e})",
            flush=True,
        )


def bench_end_to_end() -> None:
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np\n"
        "from mshedge import ControlConfig, gen_control, run_solver\n"
        "import mshedge\n"
        "inst = gen_control(ControlConfig(3, 3, 0, 0))\n"
        "t0 = time.perf_counter()\n"
        "rep = run_solver(inst, variant='inertial', tol=1e-3, max_outer=5000)\n"
        "print(f'  backend={mshedge.BACKEND}: {rep.outer_iters} outer iterations, "
        "{(time.perf_counter()-t0)*1e3:.0f} ms, err={rep.final_err:.2e}')\n"
    )
    print("end-to-end control solve (512 scenarios):", flush=True)
    for force in ("", "1"):
        env = dict(os.environ)
        if force:
            env["MSHEDGE_PURE_PYTHON"] = force
        else:
            env.pop("MSHEDGE_PURE_PYTHON", None)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="one small kernel case only")
    ns = ap.parse_args()
    bench_kernels(ns.quick)
    bench_end_to_end()
