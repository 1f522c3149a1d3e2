"""Inexact solve of the per-iteration proximal subproblem.

Given a base pair ``(x_base, y_base)`` and penalty ``r``, the subproblem
operator ``G(v) = F(v) + y_base + r (v - x_base)`` is strongly monotone
with modulus ``r`` and Lipschitz with constant ``L_F + r``, so its
box-constrained VI has a unique solution.  It decouples scenario by
scenario; the kernel iterates all scenarios jointly and stops on the
probability-weighted L2 residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import prg_solve
from .problem import MsviInstance, project_box

__all__ = ["InnerConfig", "InnerResult", "InnerSolveError", "solve_subproblem", "default_step"]

# Requests for an exact solve are floored here: unreachable in floating point.
MIN_EPS = 1e-14


@dataclass(frozen=True)
class InnerConfig:
    """Knobs for the projected-reflected-gradient inner loop.

    ``step=None`` selects the safe default ``0.99 (sqrt(2)-1) / (L_F + r)``.
    ``eps`` is the target weighted-L2 residual; ``eps=0`` is treated as
    ``1e-14``.
    """

    eps: float = 1e-10
    max_iter: int = 1_000_000
    step: float | None = None
    warm_start: bool = True

    def __post_init__(self) -> None:
        if self.eps < 0.0:
            raise ValueError("eps must be >= 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.step is not None and self.step <= 0.0:
            raise ValueError("step must be > 0")


@dataclass(frozen=True)
class InnerResult:
    """Candidate/projection pair delivered by :func:`solve_subproblem`.

    ``proj`` is exactly the box projection of
    ``x_base - (F(cand) + y_base) / r`` for the final candidate, and
    ``resid = ||cand - proj||`` in the weighted L2 norm (``resid_max`` is
    the worst single-scenario Euclidean gap).
    """

    cand: np.ndarray
    proj: np.ndarray
    iters: int
    resid: float
    resid_max: float


class InnerSolveError(RuntimeError):
    """Raised when the iteration cap is hit before the residual target."""

    def __init__(self, eps: float, achieved: float, iters: int):
        super().__init__(
            f"inner solve stalled: residual {achieved:.3e} > target {eps:.3e} "
            f"after {iters} iterations"
        )
        self.eps = eps
        self.achieved = achieved
        self.iters = iters


def default_step(lipschitz: float, r: float) -> float:
    """Largest safe reflected-gradient step for operator constant L_F + r."""
    return 0.99 * (math.sqrt(2.0) - 1.0) / (lipschitz + r)


def solve_subproblem(
    inst: MsviInstance,
    x_base: np.ndarray,
    y_base: np.ndarray,
    r: float,
    cfg: InnerConfig,
    warm: np.ndarray | None = None,
) -> InnerResult:
    """Drive the subproblem residual below ``cfg.eps`` and return the pair.

    The warm start (previous outer iteration's projection, or ``x_base``
    on the first call) is clamped into the box before iterating, so the
    candidate sequence stays feasible.
    """
    if r <= 0.0:
        raise ValueError("r must be > 0")
    x_base = np.ascontiguousarray(x_base, dtype=np.float64)
    y_base = np.ascontiguousarray(y_base, dtype=np.float64)
    if x_base.shape != (inst.m, inst.n) or y_base.shape != (inst.m, inst.n):
        raise ValueError("base pair shape does not match the instance")

    eps = max(cfg.eps, MIN_EPS)
    lam = cfg.step if cfg.step is not None else default_step(inst.mapping.lipschitz, r)

    start = warm if (warm is not None and cfg.warm_start) else x_base
    cand = np.ascontiguousarray(project_box(start, inst.box))
    proj = np.empty_like(cand)

    iters, resid, resid_max = prg_solve(
        inst.mapping.matrices,
        inst.mapping.offsets,
        inst.box.lower,
        inst.box.upper,
        x_base,
        y_base,
        inst.space.probs,
        float(r),
        float(lam),
        float(eps),
        int(cfg.max_iter),
        cand,
        proj,
    )
    if resid > eps:
        raise InnerSolveError(eps, resid, iters)
    return InnerResult(cand, proj, iters, resid, resid_max)
