"""Model validation and the collapsing constructions between model classes."""

import numpy as np
import pytest

from beliefmdp.measures import FiniteSpace
from beliefmdp.models import (
    MDPIIModel,
    ModelValidationError,
    POMDP1Spec,
    POMDP2Spec,
    check_valid,
    mdpii_from_platzman,
    platzman_from_pomdp1,
    platzman_from_pomdp2,
    validate,
)

W = FiniteSpace(("w0", "w1"))
Y = FiniteSpace(("y0", "y1"))
A = FiniteSpace(("a0", "a1"))


def small_mdpii(seed=0):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(4), size=(2, 2, 2)).reshape(2, 2, 2, 2, 2)
    P0 = rng.dirichlet(np.ones(2), size=2)
    cost = rng.uniform(0, 5, size=(2, 2, 2))
    return MDPIIModel(W, Y, A, P, P0, cost, 0.9)


def small_pomdp1(seed=0):
    rng = np.random.default_rng(seed)
    return POMDP1Spec(
        W,
        Y,
        A,
        rng.dirichlet(np.ones(2), size=(2, 2)),
        rng.dirichlet(np.ones(2), size=(2, 2)),
        rng.dirichlet(np.ones(2), size=2),
        rng.uniform(0, 1, size=(2, 2, 2)),
        0.5,
    )


def test_wellformed_model_validates_clean():
    assert validate(small_mdpii()) == []


def test_bad_row_sum_reported_with_coordinates():
    m = small_mdpii()
    P = np.array(m.P)
    P[1, 0, 1] = P[1, 0, 1] * 0.9
    bad = MDPIIModel(W, Y, A, P, m.P0, m.cost, m.discount)
    violations = validate(bad)
    assert len(violations) == 1
    v = violations[0]
    assert v.kind == "normalization"
    assert v.where == ("P", "w1", "y0", "a1")
    with pytest.raises(ModelValidationError):
        check_valid(bad)


def test_negative_cost_reported():
    m = small_mdpii()
    cost = np.array(m.cost)
    cost[0, 1, 0] = -1.0
    bad = MDPIIModel(W, Y, A, m.P, m.P0, cost, m.discount)
    violations = validate(bad)
    assert [v.kind for v in violations] == ["cost-negative"]
    assert violations[0].where == ("cost", "w0", "y1", "a0")


def test_infinite_cost_reported():
    m = small_mdpii()
    cost = np.array(m.cost)
    cost[0, 0, 0] = np.inf
    assert [v.kind for v in validate(MDPIIModel(W, Y, A, m.P, m.P0, cost, 0.9))] == [
        "cost-not-finite"
    ]


def test_shape_mismatch_raises_eagerly():
    m = small_mdpii()
    with pytest.raises(ValueError):
        MDPIIModel(W, Y, A, m.P[:, :, :, :, :1], m.P0, m.cost, 0.9)


# --------------------------------------------------------------- conversions


def test_pomdp1_point_masses_give_point_mass_joint():
    P1 = np.zeros((2, 2, 2))
    P1[:, :, 1] = 1.0  # always to w1
    Q1 = np.zeros((2, 2, 2))
    Q1[:, :, 0] = 1.0  # always y0
    spec = POMDP1Spec(W, Y, A, P1, Q1, np.full((2, 2), 0.5), np.zeros((2, 2, 2)), 1.0)
    model = platzman_from_pomdp1(spec)
    expected = np.zeros((2, 2))
    expected[1, 0] = 1.0
    assert np.array_equal(model.P[0, 0], expected)


def test_pomdp1_uniform_observation_splits_rows():
    spec = small_pomdp1()
    Q1 = np.full((2, 2, 2), 0.5)
    spec = POMDP1Spec(W, Y, A, spec.P1, Q1, spec.P0, spec.cost, spec.discount)
    model = platzman_from_pomdp1(spec)
    for w in range(2):
        for a in range(2):
            assert np.allclose(model.P[w, a], np.outer(spec.P1[w, a], [0.5, 0.5]))


def test_pomdp1_outer_product_example():
    P1 = np.tile(np.array([0.7, 0.3]), (2, 2, 1))
    Q1 = np.tile(np.array([0.4, 0.6]), (2, 2, 1))
    spec = POMDP1Spec(W, Y, A, P1, Q1, np.full((2, 2), 0.5), np.zeros((2, 2, 2)), 1.0)
    model = platzman_from_pomdp1(spec)
    assert np.allclose(
        model.P[0, 0].reshape(-1), [0.28, 0.42, 0.12, 0.18], atol=1e-15
    )


def test_pomdp1_marginals_recover_factors():
    spec = small_pomdp1(3)
    model = platzman_from_pomdp1(spec)
    assert np.allclose(model.P.sum(axis=3), spec.P1, atol=1e-15)
    assert np.allclose(model.P.sum(axis=2), spec.Q1, atol=1e-15)
    assert validate(model) == []


def test_pomdp2_perfect_observation_of_next_state():
    rng = np.random.default_rng(1)
    P2 = rng.dirichlet(np.ones(2), size=(2, 2))
    Q2 = np.zeros((2, 2, 2))
    Q2[:, 0, 0] = 1.0  # next state w0 -> y0
    Q2[:, 1, 1] = 1.0  # next state w1 -> y1
    spec = POMDP2Spec(W, Y, A, P2, Q2, np.full((2, 2), 0.5), np.zeros((2, 2, 2)), 1.0)
    model = platzman_from_pomdp2(spec)
    for w in range(2):
        for a in range(2):
            assert model.P[w, a, 0, 0] == pytest.approx(P2[w, a, 0])
            assert model.P[w, a, 1, 1] == pytest.approx(P2[w, a, 1])
            assert model.P[w, a, 0, 1] == 0.0
            assert model.P[w, a, 1, 0] == 0.0


def test_pomdp2_deterministic_state_row_is_q2():
    rng = np.random.default_rng(2)
    P2 = np.zeros((2, 2, 2))
    P2[:, :, 1] = 1.0  # always to w1
    Q2 = rng.dirichlet(np.ones(2), size=(2, 2))
    spec = POMDP2Spec(W, Y, A, P2, Q2, np.full((2, 2), 0.5), np.zeros((2, 2, 2)), 1.0)
    model = platzman_from_pomdp2(spec)
    for a in range(2):
        assert np.allclose(model.P[0, a, 1], Q2[a, 1])
        assert np.allclose(model.P[0, a, 0], 0.0)


def test_pomdp2_split_example():
    P2 = np.tile(np.array([0.5, 0.5]), (2, 2, 1))
    Q2 = np.zeros((2, 2, 2))
    Q2[:, 0] = [1.0, 0.0]
    Q2[:, 1] = [0.0, 1.0]
    spec = POMDP2Spec(W, Y, A, P2, Q2, np.full((2, 2), 0.5), np.zeros((2, 2, 2)), 1.0)
    model = platzman_from_pomdp2(spec)
    assert model.P[0, 0, 0, 0] == pytest.approx(0.5)
    assert model.P[0, 0, 1, 1] == pytest.approx(0.5)
    assert model.P[0, 0, 0, 1] == 0.0


def test_pomdp2_marginal_over_y_is_p2():
    rng = np.random.default_rng(3)
    spec = POMDP2Spec(
        W,
        Y,
        A,
        rng.dirichlet(np.ones(2), size=(2, 2)),
        rng.dirichlet(np.ones(2), size=(2, 2)),
        rng.dirichlet(np.ones(2), size=2),
        rng.uniform(0, 1, size=(2, 2, 2)),
        0.5,
    )
    model = platzman_from_pomdp2(spec)
    assert np.allclose(model.P.sum(axis=3), spec.P2, atol=1e-15)
    assert validate(model) == []


def test_mdpii_embedding_ignores_observable():
    model = platzman_from_pomdp1(small_pomdp1(4))
    full = mdpii_from_platzman(model)
    assert np.array_equal(full.P[:, 0], full.P[:, 1])
    assert np.array_equal(full.P[:, 0], model.P)
    assert validate(full) == []


def test_invalid_spec_rejected_by_conversion():
    spec = small_pomdp1()
    Q1 = np.array(spec.Q1)
    Q1[0, 0] = [0.4, 0.4]
    bad = POMDP1Spec(W, Y, A, spec.P1, Q1, spec.P0, spec.cost, spec.discount)
    with pytest.raises(ModelValidationError):
        platzman_from_pomdp1(bad)
