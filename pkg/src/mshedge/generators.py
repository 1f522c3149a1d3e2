"""Seeded instance generators for the two benchmark families.

Two families are provided:

* ``two-stage`` — a random box-constrained affine instance with a trivial
  first stage and a fully revealed second stage.  Scenario ``i`` gets the
  matrix ``B_i B_i^T + D`` (``B_i`` standard normal, ``D = diag(1..n)``)
  and a uniform[-1, 1] offset.
* ``control`` — a tracking-control instance over scaled +/-1 random-walk
  increments.  The all-ones control is a known solution and is stored on
  the instance.

Reproducibility: every generator derives its randomness from
``numpy.random.SeedSequence(seed)`` (PCG64 streams).  The two-stage
family spawns one child stream for the probabilities and one per
scenario, so instances with the same seed are identical byte-for-byte
once serialized, independent of scenario count changes elsewhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .problem import AffineMapping, BoxConstraint, MsviInstance
from .scenario import Filtration, ScenarioSpace, StageLayout

__all__ = [
    "TwoStageConfig",
    "ControlConfig",
    "ControlWalk",
    "gen_two_stage",
    "gen_control",
    "control_walk",
]

ENUMERATION_CAP = 4096


@dataclass(frozen=True)
class TwoStageConfig:
    """Scenario count, per-stage dimensions, and the master seed."""

    m: int
    n0: int
    n1: int
    seed: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n0 < 1 or self.n1 < 1:
            raise ValueError("m, n0, n1 must all be >= 1")

    def label(self) -> str:
        return f"two-stage(m={self.m};n0={self.n0};n1={self.n1};seed={self.seed})"


@dataclass(frozen=True)
class ControlConfig:
    """Stages, random-walk substeps per stage, and Monte Carlo sample size.

    ``samples = 0`` enumerates the full sign space (2^(stages*substeps)
    scenarios, capped at 4096); ``samples > 0`` draws that many paths with
    replacement and keeps duplicates as distinct scenarios with uniform
    weights.
    """

    stages: int
    substeps: int
    samples: int
    seed: int

    def __post_init__(self) -> None:
        if self.stages < 1 or self.substeps < 1 or self.samples < 0:
            raise ValueError("stages, substeps must be >= 1 and samples >= 0")
        if self.samples == 0 and 2 ** (self.stages * self.substeps) > ENUMERATION_CAP:
            raise ValueError(
                f"full enumeration needs 2^{self.stages * self.substeps} scenarios "
                f"(cap {ENUMERATION_CAP}); use samples > 0"
            )

    def label(self) -> str:
        # no commas: the label is a single CSV field in bench tables
        return (
            f"control(stages={self.stages};substeps={self.substeps};"
            f"samples={self.samples};seed={self.seed})"
        )


def gen_two_stage(cfg: TwoStageConfig) -> MsviInstance:
    """Build a random two-stage instance; same seed, same instance."""
    m, n = cfg.m, cfg.n0 + cfg.n1
    children = np.random.SeedSequence(cfg.seed).spawn(m + 1)
    rng0 = np.random.default_rng(children[0])

    probs = 1.0 - rng0.random(m)  # i.i.d. uniform (0, 1], then normalized
    probs /= probs.sum()

    diag = np.diag(np.arange(1.0, n + 1.0))
    mats = np.empty((m, n, n))
    offs = np.empty((m, n))
    for i in range(m):
        rng = np.random.default_rng(children[i + 1])
        b = rng.standard_normal((n, n))
        while not b.any():  # PSD part must be nonzero
            b = rng.standard_normal((n, n))
        mats[i] = b @ b.T + diag
        offs[i] = rng.uniform(-1.0, 1.0, n)

    return MsviInstance(
        space=ScenarioSpace(probs),
        layout=StageLayout((cfg.n0, cfg.n1)),
        filtration=Filtration.two_stage(m),
        mapping=AffineMapping(mats, offs),
        box=BoxConstraint.unit(m, n),
    )


class ControlWalk(NamedTuple):
    """Raw path data behind a control instance."""

    signs: np.ndarray  # (m, stages*substeps) +/-1 steps
    stage_sums: np.ndarray  # (m, stages+1) integer walk positions at stage ends
    increments: np.ndarray  # (m, stages) scaled per-stage increments
    weights: np.ndarray  # (m,) scenario probabilities


def control_walk(cfg: ControlConfig) -> ControlWalk:
    """Enumerate or sample the sign paths and reduce them to stage data.

    Stage increments are integer walk differences scaled by
    ``1/sqrt(stages*substeps)``; the integer stage sums are what the
    filtration groups on (no float comparisons).
    """
    total = cfg.stages * cfg.substeps
    if cfg.samples == 0:
        signs = np.array(
            list(itertools.product((-1, 1), repeat=total)), dtype=np.int64
        )
        weights = np.full(signs.shape[0], 1.0 / signs.shape[0])
    else:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        signs = rng.integers(0, 2, size=(cfg.samples, total)) * 2 - 1
        weights = np.full(cfg.samples, 1.0 / cfg.samples)
    walk = np.concatenate(
        [np.zeros((signs.shape[0], 1), dtype=np.int64), np.cumsum(signs, axis=1)],
        axis=1,
    )
    stage_sums = walk[:, :: cfg.substeps]  # positions 0, l, 2l, ..., Nl
    scale = 1.0 / np.sqrt(float(total))
    increments = np.diff(stage_sums, axis=1) * scale
    return ControlWalk(signs, stage_sums, increments, weights)


def _prefix_filtration(stage_sums: np.ndarray, stages: int) -> Filtration:
    # Stage t >= 1 groups scenarios sharing the integer prefix
    # (S_l, ..., S_tl); blocks ordered by first occurrence.
    m = stage_sums.shape[0]
    parts: list[tuple[tuple[int, ...], ...]] = [(tuple(range(m)),)]
    for t in range(1, stages):
        groups: dict[tuple[int, ...], list[int]] = {}
        for i in range(m):
            key = tuple(int(v) for v in stage_sums[i, 1 : t + 1])
            groups.setdefault(key, []).append(i)
        parts.append(tuple(tuple(g) for g in groups.values()))
    return Filtration(tuple(parts), m)


def gen_control(cfg: ControlConfig) -> MsviInstance:
    """Build a tracking-control instance whose known solution is all ones.

    The per-scenario gradient data is the rank-one matrix ``z z^T`` with
    offset ``-zeta z`` where ``z_t = (1 + 1/N)^(N-1-t) (dY_t - 1/N)`` and
    ``zeta = sum_t z_t``, so the mapping vanishes at the all-ones field.
    """
    walk = control_walk(cfg)
    stages = cfg.stages
    m = walk.weights.shape[0]
    delta = 1.0 / stages
    growth = (1.0 + delta) ** np.arange(stages - 1, -1, -1)  # stage t factor
    z = growth[None, :] * (walk.increments - delta)
    zeta = z.sum(axis=1)

    mats = z[:, :, None] * z[:, None, :]
    offs = -zeta[:, None] * z

    return MsviInstance(
        space=ScenarioSpace(walk.weights),
        layout=StageLayout((1,) * stages),
        filtration=_prefix_filtration(walk.stage_sums, stages),
        mapping=AffineMapping(mats, offs),
        box=BoxConstraint.unit(m, stages),
        known_solution=np.ones((m, stages)),
    )
