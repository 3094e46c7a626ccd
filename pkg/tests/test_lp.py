"""The bundled simplex against scipy.optimize.linprog on random programs."""

import numpy as np
import pytest
from scipy.optimize import linprog

from beliefmdp.lp import SimplexError, simplex_min_eq, transport_cost


def test_tiny_known_program():
    # min -x0 - 2*x1  s.t.  x0 + x1 = 1  ->  x = (0, 1), value -2
    c = np.array([-1.0, -2.0])
    A = np.array([[1.0, 1.0]])
    b = np.array([1.0])
    x, value = simplex_min_eq(c, A, b)
    assert value == pytest.approx(-2.0, abs=1e-12)
    assert np.allclose(x, [0.0, 1.0], atol=1e-12)


def test_infeasible_raises():
    # x0 = 1 and x0 = 2 cannot hold together.
    c = np.array([1.0])
    A = np.array([[1.0], [1.0]])
    b = np.array([1.0, 2.0])
    with pytest.raises(SimplexError):
        simplex_min_eq(c, A, b)


def test_unbounded_raises():
    # min -x0 with only x0 - x1 = 0: both can grow without bound.
    c = np.array([-1.0, 0.0])
    A = np.array([[1.0, -1.0]])
    b = np.array([0.0])
    with pytest.raises(SimplexError):
        simplex_min_eq(c, A, b)


@pytest.mark.parametrize("seed", range(30))
def test_random_equality_programs_match_scipy(seed):
    rng = np.random.default_rng(seed)
    m = rng.integers(2, 6)
    n = rng.integers(m, m + 6)
    A = rng.normal(size=(m, n))
    x_feas = rng.uniform(0.1, 1.0, size=n)
    b = A @ x_feas  # guarantees feasibility
    c = rng.normal(size=n)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    try:
        _, value = simplex_min_eq(c, A, b)
    except SimplexError:
        assert ref.status == 3  # unbounded
        return
    assert ref.status == 0
    assert value == pytest.approx(ref.fun, abs=1e-7)


@pytest.mark.parametrize("seed", range(20))
def test_random_transport_matches_scipy(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 8))
    m = int(rng.integers(2, 8))
    mu = rng.dirichlet(np.ones(n))
    nu = rng.dirichlet(np.ones(m))
    cost = rng.uniform(0, 3, size=(n, m))
    value, plan = transport_cost(mu, nu, cost)
    assert np.allclose(plan.sum(axis=1), mu, atol=1e-9)
    assert np.allclose(plan.sum(axis=0), nu, atol=1e-9)
    assert np.all(plan >= -1e-12)
    A_rows = np.zeros((n, n * m))
    for i in range(n):
        A_rows[i, i * m : (i + 1) * m] = 1.0
    A_cols = np.zeros((m, n * m))
    for j in range(m):
        A_cols[j, j::m] = 1.0
    ref = linprog(
        cost.reshape(-1),
        A_eq=np.vstack([A_rows, A_cols]),
        b_eq=np.concatenate([mu, nu]),
        bounds=(0, None),
        method="highs",
    )
    assert value == pytest.approx(ref.fun, abs=1e-9)


def test_transport_mass_mismatch_rejected():
    with pytest.raises(ValueError):
        transport_cost([1.0], [0.5], np.zeros((1, 1)))


def test_degenerate_transport_terminates():
    # Many zero-weight atoms force degenerate pivots.
    mu = np.array([1.0, 0.0, 0.0, 0.0])
    nu = np.array([0.0, 0.0, 0.0, 1.0])
    cost = np.arange(16.0).reshape(4, 4)
    value, _ = transport_cost(mu, nu, cost)
    assert value == pytest.approx(3.0, abs=1e-12)


def test_larger_transport_smoke():
    rng = np.random.default_rng(7)
    n = 64
    mu = rng.dirichlet(np.ones(n))
    nu = rng.dirichlet(np.ones(n))
    pts = rng.normal(size=(n, 2))
    cost = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    value, _ = transport_cost(mu, nu, cost)
    ref = linprog(
        cost.reshape(-1),
        A_eq=_coupling_matrix(n, n),
        b_eq=np.concatenate([mu, nu]),
        bounds=(0, None),
        method="highs",
    )
    assert value == pytest.approx(ref.fun, abs=1e-8)


def _coupling_matrix(n, m):
    A = np.zeros((n + m, n * m))
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
    for j in range(m):
        A[n + j, j::m] = 1.0
    return A
