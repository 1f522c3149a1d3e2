"""Benchmark grids over (instance family, solver variant, tolerance).

Each cell runs ``reps`` repetitions; repetition ``j`` regenerates a fresh
instance with seed ``cfg.seed + j``, so cells sharing an instance config
are paired across variants.  Individual run failures are recorded in the
cell, never fatal to the grid.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .generators import ControlConfig, TwoStageConfig, gen_control, gen_two_stage
from .inner import InnerConfig, InnerSolveError
from .pha import RunReport, SolverError, Variant, run_solver
from .problem import write_text_atomic

__all__ = [
    "BenchCell",
    "BenchPlan",
    "BenchRow",
    "BenchResult",
    "run_bench",
    "plan_from_json",
    "plan_to_json",
    "table_csv",
]

TABLE_HEADER = "variant,instance,eps,avg_iter,avg_time_ms,reps,failures"

InstanceConfig = TwoStageConfig | ControlConfig


@dataclass(frozen=True)
class BenchCell:
    instance: InstanceConfig
    variant: str
    tol: float
    reps: int = 1
    max_outer: int = 20_000

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be > 0")
        Variant(self.variant)  # validate early


@dataclass(frozen=True)
class BenchPlan:
    cells: tuple[BenchCell, ...]


@dataclass(frozen=True)
class BenchRow:
    variant: str
    instance: str
    eps: float
    avg_iter: float
    avg_time_ms: float
    reps: int
    failures: int


@dataclass
class BenchResult:
    rows: list[BenchRow]
    # (cell index, rep) -> RunReport on success, error string on failure
    reports: dict[tuple[int, int], RunReport | str]

    def csv(self) -> str:
        return table_csv(self.rows)


def _gen(cfg: InstanceConfig):
    if isinstance(cfg, TwoStageConfig):
        return gen_two_stage(cfg)
    return gen_control(cfg)


def _reseed(cfg: InstanceConfig, offset: int) -> InstanceConfig:
    return replace(cfg, seed=cfg.seed + offset)


def run_bench(plan: BenchPlan, cfg: InnerConfig | None = None) -> BenchResult:
    """Execute every cell and aggregate per-cell averages over repetitions."""
    cfg = cfg or InnerConfig()
    rows: list[BenchRow] = []
    reports: dict[tuple[int, int], RunReport | str] = {}
    for ci, cell in enumerate(plan.cells):
        iters: list[int] = []
        times: list[float] = []
        failures = 0
        for rep in range(cell.reps):
            inst = _gen(_reseed(cell.instance, rep))
            t0 = time.perf_counter()
            try:
                report = run_solver(
                    inst,
                    variant=cell.variant,
                    cfg=cfg,
                    tol=cell.tol,
                    max_outer=cell.max_outer,
                )
            except (SolverError, InnerSolveError) as exc:
                failures += 1
                reports[(ci, rep)] = str(exc)
                continue
            wall = (time.perf_counter() - t0) * 1e3
            reports[(ci, rep)] = report
            if report.status != "converged":
                failures += 1
                continue
            iters.append(report.outer_iters)
            times.append(wall)
        rows.append(
            BenchRow(
                variant=cell.variant,
                instance=cell.instance.label(),
                eps=cell.tol,
                avg_iter=float(np.mean(iters)) if iters else float("nan"),
                avg_time_ms=float(np.mean(times)) if times else float("nan"),
                reps=cell.reps,
                failures=failures,
            )
        )
    return BenchResult(rows, reports)


def table_csv(rows: list[BenchRow]) -> str:
    lines = [TABLE_HEADER]
    for row in rows:
        lines.append(
            f"{row.variant},{row.instance},{row.eps!r},{row.avg_iter!r},"
            f"{row.avg_time_ms!r},{row.reps},{row.failures}"
        )
    return "\n".join(lines) + "\n"


# ------------------ plan (de)serialization ------------------


def _instance_to_dict(cfg: InstanceConfig) -> dict[str, Any]:
    if isinstance(cfg, TwoStageConfig):
        return {"kind": "two-stage", "m": cfg.m, "n0": cfg.n0, "n1": cfg.n1, "seed": cfg.seed}
    return {
        "kind": "control",
        "stages": cfg.stages,
        "substeps": cfg.substeps,
        "samples": cfg.samples,
        "seed": cfg.seed,
    }


def _instance_from_dict(d: dict[str, Any]) -> InstanceConfig:
    kind = d.get("kind")
    if kind == "two-stage":
        return TwoStageConfig(int(d["m"]), int(d["n0"]), int(d["n1"]), int(d["seed"]))
    if kind == "control":
        return ControlConfig(
            int(d["stages"]), int(d["substeps"]), int(d["samples"]), int(d["seed"])
        )
    raise ValueError(f"unknown instance kind {kind!r}")


def plan_to_json(plan: BenchPlan) -> str:
    cells = [
        {
            "instance": _instance_to_dict(c.instance),
            "variant": c.variant,
            "tol": c.tol,
            "reps": c.reps,
            "max_outer": c.max_outer,
        }
        for c in plan.cells
    ]
    return json.dumps({"cells": cells}, indent=2)


def plan_from_json(text: str) -> BenchPlan:
    try:
        data = json.loads(text)
        cells = tuple(
            BenchCell(
                instance=_instance_from_dict(c["instance"]),
                variant=str(c["variant"]),
                tol=float(c["tol"]),
                reps=int(c.get("reps", 1)),
                max_outer=int(c.get("max_outer", 20_000)),
            )
            for c in data["cells"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed bench plan: {exc}") from exc
    return BenchPlan(cells)


def save_table(result: BenchResult, path: str) -> None:
    write_text_atomic(path, result.csv())
