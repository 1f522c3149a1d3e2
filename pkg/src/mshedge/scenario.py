"""Discrete scenario spaces, filtrations, and the weighted L2 geometry.

A random field over a discrete scenario space is stored as a plain
``(m, n)`` float64 array: row ``i`` is the decision vector attached to
scenario ``i``.  Stage structure is carried separately by a
:class:`StageLayout` (which coordinates belong to which stage) and a
:class:`Filtration` (which scenarios are indistinguishable at each stage,
as a chain of refining partitions of ``{0, ..., m-1}``).

The key operations are the probability-weighted inner product, per-block
conditional expectations, and the complementary orthogonal projections
onto the nonanticipative subspace and its complement.  All types are
immutable after construction and every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ScenarioSpace",
    "StageLayout",
    "Filtration",
    "validate_field",
    "inner_product",
    "norm",
    "expectation",
    "conditional_expectation",
    "project_nonanticipative",
    "project_complement",
    "rescale",
    "rescale_inv",
]

PROB_SUM_TOL = 1e-12

Blocks = tuple[tuple[int, ...], ...]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScenarioSpace:
    """Finite sample space: ``m`` scenarios with strictly positive weights.

    Parameters
    ----------
    probs : array_like, shape (m,)
        Scenario probabilities; all entries must be > 0 and sum to 1
        within ``1e-12`` absolute tolerance.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if p.size == 0:
            raise ValueError("scenario space needs at least one scenario")
        if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
            raise ValueError("scenario probabilities must be finite and > 0")
        if abs(float(p.sum()) - 1.0) > PROB_SUM_TOL:
            raise ValueError(
                f"scenario probabilities must sum to 1 (got {p.sum()!r})"
            )
        object.__setattr__(self, "probs", _freeze(p))

    @property
    def m(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class StageLayout:
    """Per-stage coordinate counts ``(n_0, ..., n_{N-1})`` partitioning [0, n)."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0 or any(d < 1 for d in dims):
            raise ValueError("every stage must have at least one coordinate")
        object.__setattr__(self, "dims", dims)

    @property
    def stages(self) -> int:
        return len(self.dims)

    @property
    def n(self) -> int:
        return sum(self.dims)

    def slices(self) -> list[slice]:
        """Column slice of each stage within an (m, n) field."""
        out, start = [], 0
        for d in self.dims:
            out.append(slice(start, start + d))
            start += d
        return out


@dataclass(frozen=True)
class _PartitionIndex:
    """Precomputed segment arrays for one partition of {0, ..., m-1}."""

    block_of: np.ndarray  # (m,) scenario -> block id
    order: np.ndarray  # (m,) scenarios grouped by block
    starts: np.ndarray  # (B,) offsets of each block inside `order`

    @staticmethod
    def build(blocks: Blocks, m: int) -> "_PartitionIndex":
        block_of = np.full(m, -1, dtype=np.intp)
        order_parts = []
        starts = np.empty(len(blocks), dtype=np.intp)
        pos = 0
        for b, blk in enumerate(blocks):
            if len(blk) == 0:
                raise ValueError("empty partition block")
            idx = np.asarray(blk, dtype=np.intp)
            if idx.min() < 0 or idx.max() >= m:
                raise ValueError("partition block index out of range")
            if np.any(block_of[idx] != -1):
                raise ValueError("partition blocks overlap")
            block_of[idx] = b
            starts[b] = pos
            order_parts.append(idx)
            pos += idx.size
        if pos != m or np.any(block_of < 0):
            raise ValueError("partition does not cover every scenario")
        order = np.concatenate(order_parts)
        for a in (block_of, order, starts):
            a.setflags(write=False)
        return _PartitionIndex(block_of, order, starts)


@dataclass(frozen=True)
class Filtration:
    """Chain of refining partitions of the scenario set, one per stage.

    ``partitions[t]`` lists the blocks of scenario indices that are
    indistinguishable at stage ``t``.  Stage ``t+1`` must refine stage
    ``t``: every later block lies inside an earlier one.
    """

    partitions: tuple[Blocks, ...]
    m: int
    _index: tuple[_PartitionIndex, ...] = field(repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        parts = tuple(
            tuple(tuple(int(i) for i in blk) for blk in stage)
            for stage in self.partitions
        )
        if len(parts) == 0:
            raise ValueError("filtration needs at least one stage")
        index = tuple(_PartitionIndex.build(stage, self.m) for stage in parts)
        for t in range(1, len(index)):
            coarse, fine = index[t - 1].block_of, parts[t]
            for blk in fine:
                owners = coarse[np.asarray(blk, dtype=np.intp)]
                if owners.min() != owners.max():
                    raise ValueError(
                        f"stage {t} does not refine stage {t - 1}: "
                        f"block {blk} straddles coarser blocks"
                    )
        object.__setattr__(self, "partitions", parts)
        object.__setattr__(self, "_index", index)

    @property
    def stages(self) -> int:
        return len(self.partitions)

    def is_singleton(self, t: int) -> bool:
        """True when stage ``t`` distinguishes every scenario (finest partition)."""
        return len(self.partitions[t]) == self.m

    def is_trivial(self, t: int) -> bool:
        """True when stage ``t`` lumps all scenarios together (coarsest partition)."""
        return len(self.partitions[t]) == 1

    @staticmethod
    def two_stage(m: int) -> "Filtration":
        """Trivial first stage, fully revealed second stage."""
        return Filtration(
            (
                (tuple(range(m)),),
                tuple((i,) for i in range(m)),
            ),
            m,
        )


def validate_field(x: np.ndarray, space: ScenarioSpace, layout: StageLayout) -> np.ndarray:
    """Check that ``x`` is a finite (m, n) field matching space and layout."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (space.m, layout.n):
        raise ValueError(f"field shape {x.shape} != ({space.m}, {layout.n})")
    if not np.all(np.isfinite(x)):
        raise ValueError("field has non-finite entries")
    return x


def _check_same_shape(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ValueError(f"field shapes differ: {x.shape} vs {y.shape}")


def inner_product(x: np.ndarray, y: np.ndarray, space: ScenarioSpace) -> float:
    """Weighted L2 inner product ``sum_i p_i <x_i, y_i>``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_shape(x, y)
    if x.shape[0] != space.m:
        raise ValueError(f"field has {x.shape[0]} rows, space has {space.m}")
    if x.ndim == 1:
        return float(np.dot(space.probs, x * y))
    return float(np.dot(space.probs, np.einsum("ij,ij->i", x, y)))


def norm(x: np.ndarray, space: ScenarioSpace) -> float:
    """Weighted L2 norm induced by :func:`inner_product`."""
    return float(np.sqrt(max(inner_product(x, x, space), 0.0)))


def expectation(x: np.ndarray, space: ScenarioSpace) -> np.ndarray:
    """Probability-weighted mean across scenarios: ``sum_i p_i x_i``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != space.m:
        raise ValueError(f"field has {x.shape[0]} rows, space has {space.m}")
    return space.probs @ x


def _segment_mean(x: np.ndarray, idx: _PartitionIndex, space: ScenarioSpace) -> np.ndarray:
    # Per-block weighted average broadcast back to every member row.
    p = space.probs
    one_d = x.ndim == 1
    cols = x[:, None] if one_d else x
    po = p[idx.order]
    xo = cols[idx.order]
    wsum = np.add.reduceat(po[:, None] * xo, idx.starts, axis=0)
    wtot = np.add.reduceat(po, idx.starts)
    means = wsum / wtot[:, None]
    out = means[idx.block_of]
    return out[:, 0] if one_d else out


def conditional_expectation(
    x: np.ndarray,
    partition: Sequence[Sequence[int]] | Blocks,
    space: ScenarioSpace,
) -> np.ndarray:
    """Per-block weighted average of ``x``, constant on every block.

    ``x`` may be a (m,) column or an (m, c) column group (e.g. one stage's
    coordinates).  The blocks must partition ``{0, ..., m-1}``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != space.m:
        raise ValueError(f"field has {x.shape[0]} rows, space has {space.m}")
    blocks = tuple(tuple(int(i) for i in blk) for blk in partition)
    idx = _PartitionIndex.build(blocks, space.m)
    return _segment_mean(x, idx, space)


def project_nonanticipative(
    x: np.ndarray,
    filt: Filtration,
    layout: StageLayout,
    space: ScenarioSpace,
) -> np.ndarray:
    """Orthogonal projection onto the nonanticipative subspace.

    Stage-``t`` coordinates are replaced by their conditional expectation
    with respect to the stage-``t`` partition, so the result is constant on
    every stage-``t`` block.
    """
    x = validate_field(x, space, layout)
    if filt.stages != layout.stages:
        raise ValueError(
            f"filtration has {filt.stages} stages, layout has {layout.stages}"
        )
    out = x.copy()
    for t, cols in enumerate(layout.slices()):
        if filt.is_singleton(t):
            continue  # conditioning on full information is the identity
        idx = filt._index[t]
        if filt.is_trivial(t):
            out[:, cols] = expectation(x[:, cols], space)[None, :]
        else:
            out[:, cols] = _segment_mean(x[:, cols], idx, space)
    return out


def project_complement(
    x: np.ndarray,
    filt: Filtration,
    layout: StageLayout,
    space: ScenarioSpace,
) -> np.ndarray:
    """Projection onto the orthogonal complement of the nonanticipative subspace."""
    x = np.asarray(x, dtype=np.float64)
    return x - project_nonanticipative(x, filt, layout, space)


def rescale(
    x: np.ndarray,
    r: float,
    filt: Filtration,
    layout: StageLayout,
    space: ScenarioSpace,
) -> np.ndarray:
    """Keep the nonanticipative part, scale the complement by ``r``."""
    if r <= 0.0:
        raise ValueError("rescale factor r must be > 0")
    pn = project_nonanticipative(x, filt, layout, space)
    return pn + r * (np.asarray(x, dtype=np.float64) - pn)


def rescale_inv(
    x: np.ndarray,
    r: float,
    filt: Filtration,
    layout: StageLayout,
    space: ScenarioSpace,
) -> np.ndarray:
    """Inverse of :func:`rescale`: scales the complement by ``1/r``."""
    if r <= 0.0:
        raise ValueError("rescale factor r must be > 0")
    return rescale(x, 1.0 / r, filt, layout, space)
