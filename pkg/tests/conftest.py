import numpy as np
import pytest

from mshedge import (
    AffineMapping,
    BoxConstraint,
    Filtration,
    MsviInstance,
    ScenarioSpace,
    StageLayout,
)


def random_space(rng: np.random.Generator, m: int) -> ScenarioSpace:
    p = 1.0 - rng.random(m)
    return ScenarioSpace(p / p.sum())


def random_filtration(rng: np.random.Generator, m: int, stages: int) -> Filtration:
    """Random refining chain: stage t groups scenarios by a length-(t+1)
    random label prefix, so later stages always refine earlier ones."""
    labels = rng.integers(0, 3, size=(m, stages))
    parts = []
    for t in range(stages):
        groups: dict[tuple, list[int]] = {}
        for i in range(m):
            groups.setdefault(tuple(labels[i, : t + 1]), []).append(i)
        parts.append(tuple(tuple(g) for g in groups.values()))
    return Filtration(tuple(parts), m)


def random_layout(rng: np.random.Generator, stages: int, max_dim: int = 3) -> StageLayout:
    return StageLayout(tuple(int(d) for d in rng.integers(1, max_dim + 1, stages)))


def random_mapping(rng: np.random.Generator, m: int, n: int, cond: float = 1.0) -> AffineMapping:
    mats = np.empty((m, n, n))
    for i in range(m):
        b = rng.standard_normal((n, n))
        mats[i] = b @ b.T + cond * np.eye(n)
    offs = rng.uniform(-1.0, 1.0, (m, n))
    return AffineMapping(mats, offs)


def random_instance(
    rng: np.random.Generator,
    m: int = 4,
    stages: int = 2,
    max_dim: int = 3,
    known_solution: np.ndarray | None = None,
) -> MsviInstance:
    space = random_space(rng, m)
    layout = random_layout(rng, stages, max_dim)
    filt = random_filtration(rng, m, stages)
    mapping = random_mapping(rng, m, layout.n)
    return MsviInstance(
        space, layout, filt, mapping, BoxConstraint.unit(m, layout.n), known_solution
    )


def scalar_instance(matrix: float, offset: float, lo: float = 0.0, hi: float = 1.0,
                    prob: float = 1.0) -> MsviInstance:
    """One scenario, one stage, one coordinate: F(v) = matrix*v + offset on [lo, hi]."""
    return MsviInstance(
        ScenarioSpace([prob]),
        StageLayout((1,)),
        Filtration((((0,),),), 1),
        AffineMapping(np.array([[[matrix]]]), np.array([[offset]])),
        BoxConstraint(np.array([[lo]]), np.array([[hi]])),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240613)
