"""Anchored relaxed inertial proximal-point iteration and resolvent algebra.

The loop here finds zeros of a maximal monotone operator through its
resolvent only, so the same driver serves two operator families: affine
monotone operators on R^d (resolvent = one linear solve) and the rescaled
partial inverse built from a problem instance, whose resolvent is one
tight inner subproblem solve.  The latter is what makes one outer
progressive-hedging step a proximal-point step in disguise; the
:func:`equivalence_check` harness verifies that correspondence
numerically, iterate by iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .inner import InnerConfig, InnerResult, solve_subproblem
from .pha import IterationState, ParamSchedule, initial_points, step
from .problem import MsviInstance, write_text_atomic
from .scenario import norm, project_nonanticipative

__all__ = [
    "AffineOperator",
    "ResolventOracle",
    "PpaParams",
    "PpaRun",
    "resolvent_affine",
    "builtin_ppa_params",
    "step_halpern_ppa",
    "run_ppa",
    "hedging_resolvent",
    "partial_inverse_pair",
    "project_onto_zero_set",
    "equivalence_check",
    "export_trajectory",
]

PSD_EIG_TOL = -1e-8


@dataclass(frozen=True)
class AffineOperator:
    """Monotone affine operator ``u -> M u + q`` on R^d.

    Monotonicity is validated at construction: the symmetric part of ``M``
    must be PSD within eigenvalue tolerance ``-1e-8``.
    """

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(self.matrix, dtype=np.float64)
        off = np.ascontiguousarray(self.offset, dtype=np.float64).reshape(-1)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"matrix must be square, got {mat.shape}")
        if off.shape[0] != mat.shape[0]:
            raise ValueError("offset length does not match matrix")
        min_eig = float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[0])
        if min_eig < PSD_EIG_TOL:
            raise ValueError(f"operator is not monotone (min eigenvalue {min_eig:.3e})")
        mat.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "offset", off)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(u, dtype=np.float64) + self.offset


def resolvent_affine(op: AffineOperator, s: float, u: np.ndarray) -> np.ndarray:
    """Evaluate ``(I + s T)^{-1} u`` for affine ``T``: solve ``(I + sM) v = u - sq``."""
    if s <= 0.0:
        raise ValueError("resolvent parameter s must be > 0")
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    a = np.eye(op.dim) + s * op.matrix
    try:
        return np.linalg.solve(a, u - s * op.offset)
    except np.linalg.LinAlgError as exc:  # unreachable for monotone M, s > 0
        raise ValueError(f"singular resolvent system for s={s}") from exc


@dataclass(frozen=True)
class ResolventOracle:
    """A resolvent evaluator ``w -> J_s(w)`` with a declared tolerance.

    ``tol`` is the evaluation error the oracle may commit; exact oracles
    declare 0.  The proximal loop treats the oracle as a black box.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    s: float
    tol: float = 0.0

    def __post_init__(self) -> None:
        if self.s <= 0.0:
            raise ValueError("resolvent parameter s must be > 0")
        if self.tol < 0.0:
            raise ValueError("tolerance must be >= 0")

    def __call__(self, w: np.ndarray) -> np.ndarray:
        return self.evaluate(w)

    @staticmethod
    def for_affine(op: AffineOperator, s: float) -> "ResolventOracle":
        """Exact affine resolvent with a prefactored linear system."""
        if s <= 0.0:
            raise ValueError("resolvent parameter s must be > 0")
        lu = scipy.linalg.lu_factor(np.eye(op.dim) + s * op.matrix)
        shift = s * op.offset

        def evaluate(w: np.ndarray) -> np.ndarray:
            return scipy.linalg.lu_solve(lu, np.asarray(w, dtype=np.float64) - shift)

        return ResolventOracle(evaluate, s, 0.0)


@dataclass(frozen=True)
class PpaParams:
    """Parameter sequences for the proximal loop; resolvent step is ``1/r``."""

    r: float
    alpha: Callable[[int], float]
    beta: Callable[[int], float]
    theta_bar: float = 0.0
    tau: float = 1e6

    def __post_init__(self) -> None:
        if self.r <= 0.0:
            raise ValueError("r must be > 0")
        if not 0.0 <= self.theta_bar < 1.0:
            raise ValueError("theta_bar must lie in [0, 1)")

    @property
    def s(self) -> float:
        return 1.0 / self.r


def builtin_ppa_params(dim: int, theta_bar: float = 1.0 / 3.0) -> PpaParams:
    """Reference proximal schedule mirroring the hedging one: ``r = sqrt(dim)``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return PpaParams(
        r=math.sqrt(dim),
        alpha=lambda k: 1.0 / (2000.0 * (k + 1)),
        beta=lambda k: 1.5 - 1.0 / (k + 1) ** 2,
        theta_bar=theta_bar,
    )


def _theta_for(params: PpaParams, k: int, du_norm: float) -> float:
    if params.theta_bar == 0.0:
        return 0.0
    if du_norm == 0.0 or k == 0:
        return params.theta_bar
    return min(params.alpha(k) * params.tau / (k * k * du_norm), params.theta_bar)


def step_halpern_ppa(
    u_prev: np.ndarray,
    u_cur: np.ndarray,
    u0: np.ndarray,
    oracle: ResolventOracle,
    e: np.ndarray | None,
    params: PpaParams,
    k: int,
    theta: float | None = None,
) -> np.ndarray:
    """One anchored relaxed inertial proximal step.

    Extrapolate, evaluate the resolvent at the error-shifted point, relax,
    then anchor: ``u+ = a u0 + (1-a) [(1-b) u_hat + b J(u_hat - s e)]``.
    ``theta`` overrides the adaptive inertial weight (used when replaying
    a recorded run).
    """
    alpha = params.alpha(k)
    beta = params.beta(k)
    if theta is None:
        theta = _theta_for(params, k, float(np.linalg.norm(u_cur - u_prev)))
    u_hat = u_cur + theta * (u_cur - u_prev)
    arg = u_hat if e is None else u_hat - params.s * np.asarray(e, dtype=np.float64)
    j = oracle(arg)
    return alpha * u0 + (1.0 - alpha) * ((1.0 - beta) * u_hat + beta * j)


@dataclass
class PpaRun:
    """Trajectory of proximal iterates with the stopping outcome."""

    us: list[np.ndarray]
    status: str
    iters: int

    @property
    def final(self) -> np.ndarray:
        return self.us[-1]


def run_ppa(
    oracle: ResolventOracle,
    u0: np.ndarray,
    params: PpaParams,
    max_iters: int,
    tol: float | None = None,
    errors: Callable[[int], np.ndarray | None] | None = None,
) -> PpaRun:
    """Iterate the proximal step from ``u0`` (with ``u^{-1} = u^0``).

    Runs ``max_iters`` steps, or stops early once the fixed-point residual
    ``||u - J(u)||`` falls to ``tol`` (one extra oracle call per iteration
    when a tolerance is requested).  ``errors(k)`` supplies the inexactness
    injected at step ``k``; ``None`` means exact.
    """
    u0 = np.asarray(u0, dtype=np.float64).reshape(-1).copy()
    u_prev, u = u0, u0
    us = [u0]
    status = "exhausted"
    it = 0
    for it in range(max_iters):
        if tol is not None and float(np.linalg.norm(u - oracle(u))) <= tol:
            status = "converged"
            break
        e = errors(it) if errors is not None else None
        u_next = step_halpern_ppa(u_prev, u, u0, oracle, e, params, it)
        u_prev, u = u, u_next
        us.append(u_next)
    else:
        if tol is not None and float(np.linalg.norm(u - oracle(u))) <= tol:
            status = "converged"
        it = max_iters
    return PpaRun(us, status if tol is not None else "done", it)


def export_trajectory(run: PpaRun, path: str, limit: np.ndarray | None = None) -> None:
    """Write ``k,dist_to_limit,step_norm`` rows; limit defaults to the last iterate."""
    ref = run.us[-1] if limit is None else np.asarray(limit, dtype=np.float64)
    lines = ["k,dist_to_limit,step_norm"]
    for k, u in enumerate(run.us):
        d = float(np.linalg.norm(u - ref))
        s = 0.0 if k == 0 else float(np.linalg.norm(u - run.us[k - 1]))
        lines.append(f"{k},{d!r},{s!r}")
    write_text_atomic(path, "\n".join(lines) + "\n")


# ------------------ operators built from a problem instance ------------------


def _hedging_resolvent(
    w: np.ndarray,
    inst: MsviInstance,
    r: float,
    tol: float,
    cfg: InnerConfig,
    warm: np.ndarray | None,
) -> tuple[np.ndarray, InnerResult]:
    """Resolvent (parameter ``1/r``) of the rescaled partial inverse.

    Decode the argument into a base pair, solve the subproblem tightly,
    and re-encode: ``J(w) = P_N(z) - P_M(z) + P_M(w)``.  The evaluation
    error is of the order of the inner tolerance.
    """
    if r <= 0.0:
        raise ValueError("r must be > 0")
    w = np.asarray(w, dtype=np.float64)
    pn_w = project_nonanticipative(w, inst.filtration, inst.layout, inst.space)
    pm_w = w - pn_w
    x_base = pn_w
    y_base = -r * pm_w
    res = solve_subproblem(
        inst,
        x_base,
        y_base,
        r,
        InnerConfig(eps=tol, max_iter=cfg.max_iter, step=cfg.step, warm_start=True),
        warm=warm,
    )
    z = res.proj
    pn_z = project_nonanticipative(z, inst.filtration, inst.layout, inst.space)
    val = pn_z - (z - pn_z) + pm_w
    return val, res


def hedging_resolvent(
    w: np.ndarray,
    inst: MsviInstance,
    r: float,
    tol: float = 1e-12,
    cfg: InnerConfig | None = None,
    warm: np.ndarray | None = None,
) -> np.ndarray:
    """Evaluate the proximal mapping whose fixed points decode to solutions.

    A fixed point ``w = x - y/r`` of this mapping corresponds to a
    solution pair ``(x, y)`` of the extensive-form problem.
    """
    val, _ = _hedging_resolvent(w, inst, r, tol, cfg or InnerConfig(), warm)
    return val


def instance_resolvent_oracle(
    inst: MsviInstance, r: float, tol: float = 1e-12, cfg: InnerConfig | None = None
) -> ResolventOracle:
    """Wrap :func:`hedging_resolvent` as an oracle with inner warm starting."""
    cfg = cfg or InnerConfig()
    warm: list[np.ndarray | None] = [None]

    def evaluate(w: np.ndarray) -> np.ndarray:
        val, res = _hedging_resolvent(w, inst, r, tol, cfg, warm[0])
        warm[0] = res.proj
        return val

    return ResolventOracle(evaluate, 1.0 / r, tol)


def partial_inverse_pair(
    u: np.ndarray, xi: np.ndarray, p1: np.ndarray, p2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Swap a graph pair along complementary orthogonal projections.

    Maps ``(u, xi)`` to ``(P1 u + P2 xi, P1 xi + P2 u)``; applying the map
    twice is the identity.  ``p1 + p2`` must be the identity matrix.
    """
    u = np.asarray(u, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    if not np.allclose(p1 + p2, np.eye(p1.shape[0]), atol=1e-12, rtol=0.0):
        raise ValueError("projections are not complementary (P1 + P2 != I)")
    return p1 @ u + p2 @ xi, p1 @ xi + p2 @ u


def project_onto_zero_set(op: AffineOperator, u0: np.ndarray) -> np.ndarray:
    """Least-squares projection of ``u0`` onto ``{u : M u = -q}``.

    Particular solution by least squares, then shift along an orthonormal
    kernel basis.  Intended as an independent reference for where the
    anchored iteration should land.
    """
    u0 = np.asarray(u0, dtype=np.float64).reshape(-1)
    part, *_ = np.linalg.lstsq(op.matrix, -op.offset, rcond=None)
    if np.linalg.norm(op.matrix @ part + op.offset) > 1e-8 * (
        1.0 + np.linalg.norm(op.offset)
    ):
        raise ValueError("operator has no zeros")
    kernel = scipy.linalg.null_space(op.matrix)
    if kernel.size == 0:
        return part
    return part + kernel @ (kernel.T @ (u0 - part))


# ------------------ equivalence harness ------------------


def equivalence_check(
    inst: MsviInstance,
    sched: ParamSchedule,
    cfg: InnerConfig | None = None,
    steps: int = 50,
    resolvent_tol: float = 1e-12,
) -> float:
    """Max deviation between the hedging run and its proximal twin.

    Runs the outer loop for ``steps`` iterations recording the pairs, the
    injected errors, and the parameter values actually used; then replays
    the proximal recursion with a tightly evaluated instance resolvent at
    the error-shifted points and compares the decoded iterates
    ``u^k = x^k - y^k / r`` in the weighted L2 norm.
    """
    cfg = cfg or InnerConfig()
    r = sched.r
    x0, y0 = initial_points(inst)
    state = IterationState(x_prev=x0, x=x0, y_prev=y0, y=y0, x_anchor=x0, y_anchor=y0)

    decoded = [x0 - y0 / r]
    errors: list[np.ndarray] = []
    thetas: list[float] = []
    alphas: list[float] = []
    betas: list[float] = []
    for _ in range(steps):
        state, info = step(state, inst, sched, cfg)
        decoded.append(state.x - state.y / r)
        errors.append(info.e)
        thetas.append(info.theta)
        alphas.append(info.alpha)
        betas.append(info.beta)

    u0 = decoded[0]
    u_prev, u = u0, u0
    warm: np.ndarray | None = None
    deviation = 0.0
    for k in range(steps):
        u_hat = u + thetas[k] * (u - u_prev)
        arg = u_hat - errors[k] / r
        j, res = _hedging_resolvent(arg, inst, r, resolvent_tol, cfg, warm)
        warm = res.proj
        u_next = alphas[k] * u0 + (1.0 - alphas[k]) * (
            (1.0 - betas[k]) * u_hat + betas[k] * j
        )
        deviation = max(deviation, norm(u_next - decoded[k + 1], inst.space))
        u_prev, u = u, u_next
    return deviation
