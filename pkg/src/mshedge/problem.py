"""Problem data for box-constrained multi-stage stochastic VIs.

An instance couples a scenario geometry (space, layout, filtration) with a
scenario-wise affine monotone mapping ``F_i(v) = M_i v + q_i`` and
per-scenario box constraints.  The residual functions used for both the
outer stopping rule and the inner subproblem stopping rule live here too.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from typing import Any

import numpy as np

from .scenario import (
    Filtration,
    ScenarioSpace,
    StageLayout,
    norm,
    validate_field,
)

__all__ = [
    "AffineMapping",
    "BoxConstraint",
    "MsviInstance",
    "evaluate",
    "project_box",
    "residual_err",
    "natural_residual",
    "save_instance",
    "load_instance",
]

PSD_EIG_TOL = -1e-8


@dataclass(frozen=True)
class AffineMapping:
    """Scenario-wise affine mapping ``v -> M_i v + q_i``.

    Every symmetrized matrix must be positive semidefinite (eigenvalues
    above ``-1e-8``), which makes the induced mapping on fields monotone.
    ``lipschitz`` is the max Frobenius norm of the per-scenario matrices, a
    cheap valid upper bound on the operator Lipschitz constant.
    """

    matrices: np.ndarray  # (m, n, n)
    offsets: np.ndarray  # (m, n)
    lipschitz: float = 0.0  # derived; any explicit value is overwritten

    def __post_init__(self) -> None:
        mats = np.ascontiguousarray(self.matrices, dtype=np.float64)
        offs = np.ascontiguousarray(self.offsets, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError(f"matrices must be (m, n, n), got {mats.shape}")
        if offs.shape != mats.shape[:2]:
            raise ValueError(f"offsets must be {mats.shape[:2]}, got {offs.shape}")
        if not (np.all(np.isfinite(mats)) and np.all(np.isfinite(offs))):
            raise ValueError("mapping data must be finite")
        sym = 0.5 * (mats + np.swapaxes(mats, 1, 2))
        min_eig = float(np.linalg.eigvalsh(sym)[:, 0].min())
        if min_eig < PSD_EIG_TOL:
            raise ValueError(
                f"symmetrized matrices are not PSD (min eigenvalue {min_eig:.3e})"
            )
        lip = float(np.sqrt(np.einsum("sij,sij->s", mats, mats).max()))
        mats.setflags(write=False)
        offs.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "lipschitz", lip)

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    @property
    def n(self) -> int:
        return self.matrices.shape[1]


@dataclass(frozen=True)
class BoxConstraint:
    """Per-scenario coordinate bounds, ``lower <= upper`` componentwise."""

    lower: np.ndarray  # (m, n)
    upper: np.ndarray  # (m, n)

    def __post_init__(self) -> None:
        lo = np.ascontiguousarray(self.lower, dtype=np.float64)
        hi = np.ascontiguousarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 2:
            raise ValueError(f"bounds must be matching (m, n) arrays, got {lo.shape} and {hi.shape}")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound somewhere")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @staticmethod
    def unit(m: int, n: int) -> "BoxConstraint":
        """The default [0, 1]^n box in every scenario."""
        return BoxConstraint(np.zeros((m, n)), np.ones((m, n)))

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class MsviInstance:
    """A complete problem instance with mutually consistent shapes."""

    space: ScenarioSpace
    layout: StageLayout
    filtration: Filtration
    mapping: AffineMapping
    box: BoxConstraint
    known_solution: np.ndarray | None = None

    def __post_init__(self) -> None:
        m, n = self.space.m, self.layout.n
        if self.filtration.m != m:
            raise ValueError("filtration indexes a different scenario count")
        if self.filtration.stages != self.layout.stages:
            raise ValueError("filtration and layout disagree on stage count")
        if self.mapping.matrices.shape != (m, n, n):
            raise ValueError("mapping shape does not match space/layout")
        if self.box.lower.shape != (m, n):
            raise ValueError("box shape does not match space/layout")
        if self.known_solution is not None:
            sol = validate_field(self.known_solution, self.space, self.layout)
            sol = sol.copy()
            sol.setflags(write=False)
            object.__setattr__(self, "known_solution", sol)

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def n(self) -> int:
        return self.layout.n


def evaluate(mapping: AffineMapping, x: np.ndarray) -> np.ndarray:
    """Apply the affine mapping row-wise: ``row_i = M_i x_i + q_i``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != mapping.offsets.shape:
        raise ValueError(f"field shape {x.shape} != {mapping.offsets.shape}")
    return (mapping.matrices @ x[:, :, None])[:, :, 0] + mapping.offsets


def project_box(x: np.ndarray, box: BoxConstraint) -> np.ndarray:
    """Componentwise clamp onto the box (the metric projection)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != box.lower.shape:
        raise ValueError(f"field shape {x.shape} != {box.lower.shape}")
    return np.clip(x, box.lower, box.upper)


def residual_err(x: np.ndarray, y: np.ndarray, inst: MsviInstance, r: float) -> float:
    """Outer-loop stopping residual, max over scenarios.

    Per scenario: the Euclidean distance between ``x_i`` and its projected
    gradient image ``clamp(x_i - (F(x)_i + y_i) / r)``.  Zero exactly at a
    solution pair of the extensive form.  ``x`` is expected
    nonanticipative and ``y`` in the complement subspace; neither is
    enforced here.
    """
    if r <= 0.0:
        raise ValueError("r must be > 0")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    gap = x - project_box(x - (evaluate(inst.mapping, x) + y) / r, inst.box)
    return float(np.sqrt(np.einsum("ij,ij->i", gap, gap)).max())


def natural_residual(
    x_cand: np.ndarray,
    x_base: np.ndarray,
    y_base: np.ndarray,
    inst: MsviInstance,
    r: float,
) -> tuple[np.ndarray, float]:
    """Subproblem residual of a candidate against a base pair.

    Measures, per scenario, the gap between the candidate ``x_cand`` and
    the projection ``clamp(x_base - (F(x_cand) + y_base) / r)``; the
    mapping is evaluated at the candidate.  Returns the per-scenario
    Euclidean gaps and their probability-weighted L2 aggregate, which is
    the quantity the inner solver drives below its tolerance.
    """
    if r <= 0.0:
        raise ValueError("r must be > 0")
    x_cand = np.asarray(x_cand, dtype=np.float64)
    w = project_box(
        np.asarray(x_base, dtype=np.float64)
        - (evaluate(inst.mapping, x_cand) + np.asarray(y_base, dtype=np.float64)) / r,
        inst.box,
    )
    gap = x_cand - w
    per = np.sqrt(np.einsum("ij,ij->i", gap, gap))
    agg = norm(gap, inst.space)
    return per, agg


# ------------------ single-file JSON serialization ------------------


def _instance_dict(inst: MsviInstance) -> dict[str, Any]:
    d: dict[str, Any] = {
        "m": inst.m,
        "p": inst.space.probs.tolist(),
        "N": inst.layout.stages,
        "dims": list(inst.layout.dims),
        "partitions": [
            [list(blk) for blk in stage] for stage in inst.filtration.partitions
        ],
        "M": inst.mapping.matrices.tolist(),
        "b": inst.mapping.offsets.tolist(),
        "lower": inst.box.lower.tolist(),
        "upper": inst.box.upper.tolist(),
    }
    if inst.known_solution is not None:
        d["known_solution"] = inst.known_solution.tolist()
    return d


def _instance_from_dict(d: dict[str, Any]) -> MsviInstance:
    space = ScenarioSpace(np.asarray(d["p"], dtype=np.float64))
    layout = StageLayout(tuple(d["dims"]))
    filt = Filtration(
        tuple(tuple(tuple(blk) for blk in stage) for stage in d["partitions"]),
        int(d["m"]),
    )
    mapping = AffineMapping(
        np.asarray(d["M"], dtype=np.float64), np.asarray(d["b"], dtype=np.float64)
    )
    box = BoxConstraint(
        np.asarray(d["lower"], dtype=np.float64),
        np.asarray(d["upper"], dtype=np.float64),
    )
    sol = d.get("known_solution")
    return MsviInstance(
        space,
        layout,
        filt,
        mapping,
        box,
        None if sol is None else np.asarray(sol, dtype=np.float64),
    )


def instance_text(inst: MsviInstance) -> str:
    """Canonical JSON text of an instance (decimal repr round-trips exactly)."""
    return json.dumps(_instance_dict(inst), indent=None, separators=(",", ":"))


def write_text_atomic(path: str, text: str) -> None:
    """Write via a temp file + rename so readers never see a partial file."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_instance(inst: MsviInstance, path: str) -> None:
    write_text_atomic(path, instance_text(inst) + "\n")


def load_instance(path: str) -> MsviInstance:
    with open(path) as f:
        d = json.load(f)
    try:
        return _instance_from_dict(d)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance file {path!r}: {exc}") from exc
