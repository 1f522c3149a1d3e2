"""Command line interface: gen / solve / bench / equiv.

Seeds resolve as: ``--seed`` flag, then the ``MSHEDGE_SEED`` environment
variable, then the subcommand default.  All output files are written
atomically (temp file + rename), so a crashed run never leaves a partial
file behind.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .bench import plan_from_json, run_bench, save_table
from .inner import InnerConfig, InnerSolveError
from .pha import SolverError, Variant, builtin_schedule, run_solver
from .ppa import equivalence_check
from .problem import load_instance, save_instance, write_text_atomic
from .generators import ControlConfig, TwoStageConfig, gen_control, gen_two_stage

ENV_SEED = "MSHEDGE_SEED"


def _resolve_seed(flag_value: int | None, default: int = 0) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"{ENV_SEED} must be an integer, got {env!r}") from exc
    return default


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mshedge",
        description="Solvers and benchmarks for multi-stage stochastic "
        "variational inequalities on discrete scenario spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance file")
    gen_kind = gen.add_subparsers(dest="kind", required=True)
    two = gen_kind.add_parser("two-stage", help="random two-stage affine instance")
    two.add_argument("--scenarios", "-m", type=int, default=10)
    two.add_argument("--n0", type=int, default=10)
    two.add_argument("--n1", type=int, default=10)
    ctrl = gen_kind.add_parser("control", help="random-walk tracking-control instance")
    ctrl.add_argument("--stages", type=int, default=3)
    ctrl.add_argument("--substeps", type=int, default=3)
    ctrl.add_argument(
        "--samples", type=int, default=0, help="0 enumerates the full sign space"
    )
    for p in (two, ctrl):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output file (default <out-dir>/instance.json)")
        p.add_argument("--out-dir", default=".")

    solve = sub.add_parser("solve", help="solve an instance file, write report files")
    solve.add_argument("instance")
    solve.add_argument(
        "--variant", choices=[v.value for v in Variant], default=Variant.INERTIAL.value
    )
    solve.add_argument("--tol", type=float, default=1e-4)
    solve.add_argument("--max-outer", type=int, default=20_000)
    solve.add_argument("--out-dir", default=".")
    solve.add_argument("--format", choices=["csv", "json"], default="json",
                       help="stdout rendering of the run summary")

    bench = sub.add_parser("bench", help="run a bench plan file, write the table")
    bench.add_argument("plan")
    bench.add_argument("--out-dir", default=".")

    equiv = sub.add_parser(
        "equiv", help="deviation between the hedging run and its proximal twin"
    )
    equiv.add_argument("instance")
    equiv.add_argument("--steps", type=int, default=50)
    equiv.add_argument(
        "--variant", choices=[v.value for v in Variant], default=Variant.INERTIAL.value
    )
    return parser


def _cmd_gen(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    if args.kind == "two-stage":
        inst = gen_two_stage(TwoStageConfig(args.scenarios, args.n0, args.n1, seed))
    else:
        inst = gen_control(ControlConfig(args.stages, args.substeps, args.samples, seed))
    out = args.out or os.path.join(args.out_dir, "instance.json")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    save_instance(inst, out)
    print(out)
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    report = run_solver(
        inst,
        variant=args.variant,
        cfg=InnerConfig(),
        tol=args.tol,
        max_outer=args.max_outer,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    report.save_trace(os.path.join(args.out_dir, "trace.csv"))
    report.save_summary(os.path.join(args.out_dir, "summary.json"))
    if args.format == "json":
        print(json.dumps(report.summary()))
    else:
        s = report.summary()
        print("variant,outer_iters,wall_ms,final_err,status")
        print(
            f"{s['variant']},{s['outer_iters']},{s['wall_ms']!r},"
            f"{s['final_err']!r},{s['status']}"
        )
    return 0 if report.status == "converged" else 3


def _cmd_bench(args: argparse.Namespace) -> int:
    with open(args.plan) as f:
        plan = plan_from_json(f.read())
    result = run_bench(plan)
    os.makedirs(args.out_dir, exist_ok=True)
    save_table(result, os.path.join(args.out_dir, "table.csv"))
    runs_dir = os.path.join(args.out_dir, "runs")
    os.makedirs(runs_dir, exist_ok=True)
    for (ci, rep), rr in result.reports.items():
        base = os.path.join(runs_dir, f"cell{ci:03d}_rep{rep:02d}")
        if isinstance(rr, str):
            write_text_atomic(base + ".error.txt", rr + "\n")
        else:
            rr.save_trace(base + ".trace.csv")
            rr.save_summary(base + ".summary.json")
    print(result.csv(), end="")
    return 0


def _cmd_equiv(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    sched = builtin_schedule(args.variant, inst.n)
    deviation = equivalence_check(inst, sched, steps=args.steps)
    print(f"{deviation!r}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "equiv":
            return _cmd_equiv(args)
    except (ValueError, OSError, json.JSONDecodeError, SolverError, InnerSolveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
