"""Progressive-hedging outer loops: anchored, relaxed, inertial, inexact.

One outer step extrapolates the current pair with the inertial weight,
solves the scenario-decoupled proximal subproblem inexactly, then mixes
the relaxed resolvent update with the fixed starting point (the anchor)
using a vanishing weight.  Switching parameters off recovers the classic
solver family:

========  =====================================  ==========================
variant   parameters forced                      update character
========  =====================================  ==========================
pha       alpha=theta=0, beta=1, tight solves    classic progressive hedging
relaxed   alpha=theta=0                          over-relaxed, inexact
halpern   theta=0                                anchored + relaxed, inexact
inertial  (none)                                 anchored + relaxed + inertia
========  =====================================  ==========================
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

import numpy as np

from .inner import InnerConfig, InnerResult, InnerSolveError, solve_subproblem
from .problem import MsviInstance, residual_err, write_text_atomic
from .scenario import norm, project_nonanticipative

__all__ = [
    "Variant",
    "ParamSchedule",
    "IterationState",
    "StepInfo",
    "IterRecord",
    "RunReport",
    "SolverError",
    "theta_hat",
    "builtin_schedule",
    "initial_points",
    "step",
    "run_solver",
]


class Variant(str, Enum):
    PHA = "pha"
    RELAXED = "relaxed"
    HALPERN = "halpern"
    INERTIAL = "inertial"


class SolverError(RuntimeError):
    """Outer-loop failure wrapping the offending iteration's context."""


@dataclass(frozen=True)
class ParamSchedule:
    """Outer-loop parameter sequences.

    ``alpha(k)`` is the anchor weight, ``beta(k)`` the relaxation,
    ``eps(k)`` the inner tolerance; the inertial weight is computed
    per-iteration by :func:`theta_hat`, capped at ``theta_bar`` and scaled
    by ``tau`` (``theta_bar = 0`` disables inertia).  The builtin
    schedules satisfy the usual conditions by construction: alpha vanishes
    but is not summable, beta stays inside (0, 2), eps is summable, and
    each inertial term is bounded by ``tau / k^2``.
    """

    r: float
    alpha: Callable[[int], float]
    beta: Callable[[int], float]
    eps: Callable[[int], float]
    theta_bar: float = 0.0
    tau: float = 1e6
    label: str = "custom"

    def __post_init__(self) -> None:
        if self.r <= 0.0:
            raise ValueError("r must be > 0")
        if not 0.0 <= self.theta_bar < 1.0:
            raise ValueError("theta_bar must lie in [0, 1)")
        if self.tau <= 0.0:
            raise ValueError("tau must be > 0")
        for k in (0, 1):
            a, b, e = self.alpha(k), self.beta(k), self.eps(k)
            if not 0.0 <= a < 1.0:
                raise ValueError(f"alpha({k}) = {a} outside [0, 1)")
            if not 0.0 < b < 2.0:
                raise ValueError(f"beta({k}) = {b} outside (0, 2)")
            if e < 0.0:
                raise ValueError(f"eps({k}) = {e} negative")

    def describe(self) -> dict:
        return {
            "label": self.label,
            "r": self.r,
            "alpha0": self.alpha(0),
            "beta0": self.beta(0),
            "eps0": self.eps(0),
            "theta_bar": self.theta_bar,
            "tau": self.tau,
        }


TIGHT_EPS = 1e-12


def builtin_schedule(variant: Variant | str, n: int) -> ParamSchedule:
    """Reference schedule for a coordinate dimension ``n``: ``r = sqrt(n)``,
    anchor weight ``1/(2000(k+1))``, relaxation ``1.5 - 1/(k+1)^2``, inner
    tolerance ``1e-4/(k+1)^2`` (tight ``1e-12`` for the classic solver),
    inertial cap ``1/3`` with scale ``1e6``.  Degenerate parameters are
    forced per variant.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    variant = Variant(variant)
    r = math.sqrt(n)
    alpha = lambda k: 1.0 / (2000.0 * (k + 1))  # noqa: E731
    beta = lambda k: 1.5 - 1.0 / (k + 1) ** 2  # noqa: E731
    eps = lambda k: 1e-4 / (k + 1) ** 2  # noqa: E731
    zero = lambda k: 0.0  # noqa: E731
    one = lambda k: 1.0  # noqa: E731
    tight = lambda k: TIGHT_EPS  # noqa: E731
    if variant is Variant.PHA:
        return ParamSchedule(r, zero, one, tight, 0.0, label="builtin-pha")
    if variant is Variant.RELAXED:
        return ParamSchedule(r, zero, beta, eps, 0.0, label="builtin-relaxed")
    if variant is Variant.HALPERN:
        return ParamSchedule(r, alpha, beta, eps, 0.0, label="builtin-halpern")
    return ParamSchedule(r, alpha, beta, eps, 1.0 / 3.0, label="builtin-inertial")


def theta_hat(
    k: int,
    alpha_k: float,
    dx: np.ndarray,
    dy: np.ndarray,
    r: float,
    theta_bar: float,
    tau: float,
    space,
) -> float:
    """Adaptive inertial weight in ``[0, theta_bar]``.

    Returns the cap when the pair did not move; otherwise
    ``min(tau * alpha_k / (k^2 ||dx - dy/r||), theta_bar)``, which bounds
    every scaled inertial term by ``tau / k^2`` and keeps their sum finite.
    """
    if theta_bar == 0.0:
        return 0.0
    du = norm(dx - dy / r, space)
    if du == 0.0 or k == 0:
        return theta_bar
    return min(tau * alpha_k / (k * k * du), theta_bar)


@dataclass
class IterationState:
    """Two consecutive pairs plus the anchors and the inner warm start."""

    x_prev: np.ndarray
    x: np.ndarray
    y_prev: np.ndarray
    y: np.ndarray
    x_anchor: np.ndarray
    y_anchor: np.ndarray
    k: int = 0
    warm: np.ndarray | None = None


@dataclass(frozen=True)
class StepInfo:
    theta: float
    alpha: float
    beta: float
    eps: float
    inner_iters: int
    resid: float
    e_norm: float
    e: np.ndarray = field(repr=False)


def initial_points(inst: MsviInstance) -> tuple[np.ndarray, np.ndarray]:
    """Default start: nonanticipative box midpoint and a zero multiplier."""
    x0 = project_nonanticipative(
        inst.box.midpoint(), inst.filtration, inst.layout, inst.space
    )
    return x0, np.zeros((inst.m, inst.n))


def step(
    state: IterationState,
    inst: MsviInstance,
    sched: ParamSchedule,
    cfg: InnerConfig,
) -> tuple[IterationState, StepInfo]:
    """Advance the pair by one outer iteration.

    The new decision iterate stays nonanticipative and the new multiplier
    stays in the complement subspace by construction: every term is either
    an anchor, an extrapolation of members, or an explicit projection.
    """
    k = state.k
    r = sched.r
    alpha = sched.alpha(k)
    beta = sched.beta(k)
    eps_k = sched.eps(k)
    dx = state.x - state.x_prev
    dy = state.y - state.y_prev
    theta = theta_hat(
        k, alpha, dx, dy, r, sched.theta_bar, sched.tau, inst.space
    )
    x_hat = state.x + theta * dx
    y_hat = state.y + theta * dy

    try:
        res: InnerResult = solve_subproblem(
            inst, x_hat, y_hat, r, replace(cfg, eps=eps_k), warm=state.warm
        )
    except InnerSolveError as exc:
        raise SolverError(f"outer iteration {k}: {exc}") from exc

    # e = F(cand) - F(proj); offsets cancel for the affine mapping.
    gap = res.cand - res.proj
    e = (inst.mapping.matrices @ gap[:, :, None])[:, :, 0]
    pn_z = project_nonanticipative(res.proj, inst.filtration, inst.layout, inst.space)
    pm_z = res.proj - pn_z
    pm_e = e - project_nonanticipative(e, inst.filtration, inst.layout, inst.space)

    x_next = alpha * state.x_anchor + (1.0 - alpha) * (
        (1.0 - beta) * x_hat + beta * pn_z
    )
    y_next = alpha * state.y_anchor + (1.0 - alpha) * (
        (1.0 - beta) * y_hat + beta * (y_hat + r * pm_z + pm_e)
    )

    info = StepInfo(
        theta=theta,
        alpha=alpha,
        beta=beta,
        eps=eps_k,
        inner_iters=res.iters,
        resid=res.resid,
        e_norm=norm(e, inst.space),
        e=e,
    )
    new_state = IterationState(
        x_prev=state.x,
        x=x_next,
        y_prev=state.y,
        y=y_next,
        x_anchor=state.x_anchor,
        y_anchor=state.y_anchor,
        k=k + 1,
        warm=res.proj,
    )
    return new_state, info


@dataclass(frozen=True)
class IterRecord:
    k: int
    err: float
    e_norm: float
    theta: float
    alpha: float
    beta: float
    eps: float
    inner_iters: int
    elapsed_ms: float


TRACE_HEADER = "k,err,e_norm,theta,alpha,beta,eps,inner_iters,elapsed_ms"


@dataclass
class RunReport:
    """Per-iteration trace plus the final pair and status."""

    variant: str
    params: dict
    status: str
    records: list[IterRecord]
    x: np.ndarray
    y: np.ndarray
    outer_iters: int
    wall_ms: float
    final_err: float
    iterates: list[tuple[np.ndarray, np.ndarray]] | None = None

    def trace_csv(self) -> str:
        lines = [TRACE_HEADER]
        for rec in self.records:
            lines.append(
                f"{rec.k},{rec.err!r},{rec.e_norm!r},{rec.theta!r},{rec.alpha!r},"
                f"{rec.beta!r},{rec.eps!r},{rec.inner_iters},{rec.elapsed_ms!r}"
            )
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "variant": self.variant,
            "params": self.params,
            "outer_iters": self.outer_iters,
            "wall_ms": self.wall_ms,
            "final_err": self.final_err,
            "status": self.status,
        }

    def save_trace(self, path: str) -> None:
        write_text_atomic(path, self.trace_csv())

    def save_summary(self, path: str) -> None:
        write_text_atomic(path, json.dumps(self.summary(), indent=2) + "\n")


def run_solver(
    inst: MsviInstance,
    variant: Variant | str = Variant.INERTIAL,
    sched: ParamSchedule | None = None,
    cfg: InnerConfig | None = None,
    tol: float = 1e-4,
    max_outer: int = 10_000,
    x0: np.ndarray | None = None,
    y0: np.ndarray | None = None,
    keep_iterates: bool = False,
) -> RunReport:
    """Iterate until the outer residual drops below ``tol``.

    Initial points default to the nonanticipative box midpoint and the
    zero multiplier; supplied ones are projected onto their subspaces so
    the iteration's preconditions hold.  The returned trace records, at
    every ``k``, the residual of the pair *before* step ``k`` together
    with the parameters the step used; the terminal row carries only the
    final residual.
    """
    variant = Variant(variant)
    if sched is None:
        sched = builtin_schedule(variant, inst.n)
    if cfg is None:
        cfg = InnerConfig()
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    if max_outer < 0:
        raise ValueError("max_outer must be >= 0")

    if x0 is None or y0 is None:
        dx0, dy0 = initial_points(inst)
        x0 = dx0 if x0 is None else x0
        y0 = dy0 if y0 is None else y0
    x0 = project_nonanticipative(
        np.asarray(x0, dtype=np.float64), inst.filtration, inst.layout, inst.space
    )
    y0 = np.asarray(y0, dtype=np.float64)
    y0 = y0 - project_nonanticipative(y0, inst.filtration, inst.layout, inst.space)

    state = IterationState(
        x_prev=x0, x=x0, y_prev=y0, y=y0, x_anchor=x0, y_anchor=y0
    )
    records: list[IterRecord] = []
    iterates: list[tuple[np.ndarray, np.ndarray]] | None = [] if keep_iterates else None
    status = "exhausted"
    t_start = time.perf_counter()
    err = math.inf
    for _ in range(max_outer):
        err = residual_err(state.x, state.y, inst, sched.r)
        if iterates is not None:
            iterates.append((state.x.copy(), state.y.copy()))
        if err < tol:
            records.append(IterRecord(state.k, err, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0))
            status = "converged"
            break
        t0 = time.perf_counter()
        state, info = step(state, inst, sched, cfg)
        records.append(
            IterRecord(
                state.k - 1,
                err,
                info.e_norm,
                info.theta,
                info.alpha,
                info.beta,
                info.eps,
                info.inner_iters,
                (time.perf_counter() - t0) * 1e3,
            )
        )
    else:
        err = residual_err(state.x, state.y, inst, sched.r)
        if iterates is not None:
            iterates.append((state.x.copy(), state.y.copy()))
        records.append(IterRecord(state.k, err, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0))
        status = "converged" if err < tol else "exhausted"
    wall_ms = (time.perf_counter() - t_start) * 1e3

    return RunReport(
        variant=variant.value,
        params=sched.describe(),
        status=status,
        records=records,
        x=state.x,
        y=state.y,
        outer_iters=state.k,
        wall_ms=wall_ms,
        final_err=err,
        iterates=iterates,
    )
