import numpy as np
import pytest

from mshedge import (
    AffineMapping,
    BoxConstraint,
    MsviInstance,
    evaluate,
    inner_product,
    load_instance,
    natural_residual,
    norm,
    project_box,
    residual_err,
    save_instance,
)
from conftest import random_instance, random_mapping, scalar_instance


# ------------------ affine mapping ------------------


def test_evaluate_examples(rng):
    m, n = 3, 2
    eye = np.tile(np.eye(n), (m, 1, 1))
    fmap = AffineMapping(eye, np.zeros((m, n)))
    x = rng.standard_normal((m, n))
    np.testing.assert_allclose(evaluate(fmap, x), x)

    offs = rng.uniform(-1, 1, (m, n))
    fmap2 = AffineMapping(eye, offs)
    np.testing.assert_allclose(evaluate(fmap2, np.zeros((m, n))), offs)

    single = AffineMapping(np.array([[[2.0]]]), np.array([[1.0]]))
    np.testing.assert_allclose(evaluate(single, np.array([[3.0]])), [[7.0]])

    with pytest.raises(ValueError):
        evaluate(fmap, np.zeros((m, n + 1)))


def test_mapping_rejects_nonmonotone():
    with pytest.raises(ValueError, match="PSD"):
        AffineMapping(np.array([[[-1.0]]]), np.array([[0.0]]))
    # skew part is fine: symmetrized matrix is zero
    AffineMapping(np.array([[[0.0, 1.0], [-1.0, 0.0]]]), np.zeros((1, 2)))


def test_lipschitz_upper_bounds_operator_norms(rng):
    fmap = random_mapping(rng, 5, 4)
    spec = max(np.linalg.norm(fmap.matrices[i], 2) for i in range(5))
    assert fmap.lipschitz >= spec - 1e-12


def test_mapping_monotone_and_lipschitz_on_fields(rng):
    inst = random_instance(rng, m=5, stages=2)
    sp = inst.space
    for _ in range(20):
        x = rng.standard_normal((inst.m, inst.n))
        y = rng.standard_normal((inst.m, inst.n))
        fx, fy = evaluate(inst.mapping, x), evaluate(inst.mapping, y)
        gap = norm(x - y, sp)
        assert inner_product(fx - fy, x - y, sp) >= -1e-10 * gap**2
        assert norm(fx - fy, sp) <= inst.mapping.lipschitz * gap * (1 + 1e-10)


# ------------------ box projection ------------------


def test_project_box_examples():
    box = BoxConstraint.unit(1, 3)
    np.testing.assert_array_equal(
        project_box(np.array([[0.3, -2.0, 5.0]]), box), [[0.3, 0.0, 1.0]]
    )
    interior = np.array([[0.2, 0.5, 0.9]])
    np.testing.assert_array_equal(project_box(interior, box), interior)
    with pytest.raises(ValueError):
        BoxConstraint(np.ones((1, 2)), np.zeros((1, 2)))


def test_project_box_nonexpansive(rng):
    inst = random_instance(rng, m=4)
    for _ in range(20):
        a = rng.standard_normal((inst.m, inst.n)) * 3
        b = rng.standard_normal((inst.m, inst.n)) * 3
        da = project_box(a, inst.box) - project_box(b, inst.box)
        assert norm(da, inst.space) <= norm(a - b, inst.space) + 1e-14


# ------------------ residuals ------------------


def test_residual_err_scalar_oracle():
    # F(x) = x - 0.5 on [0, 1]: solution x* = 0.5 with zero multiplier
    inst = scalar_instance(1.0, -0.5)
    y0 = np.zeros((1, 1))
    assert residual_err(np.array([[0.3]]), y0, inst, 1.0) == pytest.approx(0.2)
    assert residual_err(np.array([[0.5]]), y0, inst, 1.0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        residual_err(np.array([[0.5]]), y0, inst, 0.0)


def test_natural_residual_examples():
    # F(z) = z, r = 1, base 0.5, candidate 0.3: |0.3 - clamp(0.5 - 0.3)| = 0.1
    inst = scalar_instance(1.0, 0.0)
    per, agg = natural_residual(
        np.array([[0.3]]), np.array([[0.5]]), np.zeros((1, 1)), inst, 1.0
    )
    assert per[0] == pytest.approx(0.1)
    assert agg == pytest.approx(0.1)

    # pure projection case: zero mapping, candidate = clamp(base)
    inst0 = scalar_instance(0.0, 0.0)
    base = np.array([[1.7]])
    cand = project_box(base, inst0.box)
    per, agg = natural_residual(cand, base, np.zeros((1, 1)), inst0, 2.0)
    assert agg == pytest.approx(0.0, abs=1e-15)

    with pytest.raises(ValueError):
        natural_residual(cand, base, np.zeros((1, 1)), inst0, -1.0)


def test_natural_residual_zero_at_exact_solution():
    # exact subproblem solution of F(z)=z, r=1, base 0.5 is 0.25
    inst = scalar_instance(1.0, 0.0)
    per, agg = natural_residual(
        np.array([[0.25]]), np.array([[0.5]]), np.zeros((1, 1)), inst, 1.0
    )
    assert agg == pytest.approx(0.0, abs=1e-12)


# ------------------ instance shape validation ------------------


def test_instance_shape_mismatch(rng):
    inst = random_instance(rng, m=3, stages=2)
    with pytest.raises(ValueError):
        MsviInstance(
            inst.space,
            inst.layout,
            inst.filtration,
            inst.mapping,
            BoxConstraint.unit(inst.m + 1, inst.n),
        )
    with pytest.raises(ValueError):
        MsviInstance(
            inst.space,
            inst.layout,
            inst.filtration,
            inst.mapping,
            inst.box,
            known_solution=np.zeros((inst.m, inst.n + 2)),
        )


# ------------------ serialization ------------------


def test_instance_roundtrip_exact(rng, tmp_path):
    inst = random_instance(rng, m=4, stages=3)
    path = str(tmp_path / "inst.json")
    save_instance(inst, path)
    back = load_instance(path)
    np.testing.assert_array_equal(back.space.probs, inst.space.probs)
    assert back.layout.dims == inst.layout.dims
    assert back.filtration.partitions == inst.filtration.partitions
    np.testing.assert_array_equal(back.mapping.matrices, inst.mapping.matrices)
    np.testing.assert_array_equal(back.mapping.offsets, inst.mapping.offsets)
    np.testing.assert_array_equal(back.box.lower, inst.box.lower)
    np.testing.assert_array_equal(back.box.upper, inst.box.upper)
    assert back.known_solution is None

    with_sol = MsviInstance(
        inst.space,
        inst.layout,
        inst.filtration,
        inst.mapping,
        inst.box,
        known_solution=np.full((inst.m, inst.n), 0.5),
    )
    save_instance(with_sol, path)
    np.testing.assert_array_equal(
        load_instance(path).known_solution, with_sol.known_solution
    )


def test_load_malformed_instance(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"m": 2}')
    with pytest.raises(ValueError, match="malformed"):
        load_instance(str(path))
