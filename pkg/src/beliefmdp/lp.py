"""Bundled dense linear programming for the metric computations.

A small two-phase primal simplex working on dense tableaus.  It exists so
the distance computations carry no external solver dependency; support
sizes are capped well below anything that would need a sparse or revised
implementation.

Pivot selection is Dantzig's rule with a permanent switch to Bland's rule
after a stall, which guarantees finite termination on degenerate problems.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SimplexError", "simplex_min_eq", "transport_cost"]

_PIVOT_TOL = 1e-10


class SimplexError(RuntimeError):
    """Raised when the LP is infeasible/unbounded or the tableau degrades."""


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: np.ndarray, ncols: int) -> None:
    """Minimize the objective encoded in the last tableau row in place."""
    m = T.shape[0] - 1
    stall = 0
    bland = False
    last_obj = T[-1, -1]
    # Loose bound on basis-set combinations; only reachable under Bland's
    # rule, which cannot cycle, so hitting it indicates a broken tableau.
    max_iter = 50 * (m + ncols + 10) ** 2
    for _ in range(max_iter):
        costs = T[-1, :ncols]
        if bland:
            entering = -1
            for j in range(ncols):
                if costs[j] < -_PIVOT_TOL:
                    entering = j
                    break
        else:
            entering = int(np.argmin(costs))
            if costs[entering] >= -_PIVOT_TOL:
                entering = -1
        if entering < 0:
            return
        column = T[:m, entering]
        rhs = T[:m, -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(column > _PIVOT_TOL, rhs / column, np.inf)
        leaving = int(np.argmin(ratios))
        if not np.isfinite(ratios[leaving]):
            raise SimplexError("LP is unbounded")
        if bland:
            # Tie-break on the smallest basis index to prevent cycling.
            best = ratios[leaving]
            for i in range(m):
                if ratios[i] <= best + _PIVOT_TOL and basis[i] < basis[leaving]:
                    leaving = i
        _pivot(T, basis, leaving, entering)
        # The corner entry carries the negated objective: minimization
        # progress shows as an increase.  Degenerate pivots leave it
        # unchanged; a long stall switches to Bland's rule for good.
        obj = T[-1, -1]
        if obj > last_obj + _PIVOT_TOL:
            stall = 0
        else:
            stall += 1
            if stall > m + 10:
                bland = True
        last_obj = obj
    raise SimplexError("simplex did not terminate")


def simplex_min_eq(
    c: np.ndarray, A: np.ndarray, b: np.ndarray, *, feas_tol: float = 1e-8
) -> tuple[np.ndarray, float]:
    """Solve min c.x subject to A x = b, x >= 0 with a dense two-phase simplex.

    Returns the optimal vertex and objective value.  Raises
    :class:`SimplexError` when the program is infeasible or unbounded.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    A = A.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial variables start basic; minimize their sum.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, n : n + m] = 1.0
    basis = np.arange(n, n + m)
    for i in range(m):
        T[-1] -= T[i]
    _run_simplex(T, basis, n + m)
    if T[-1, -1] < -feas_tol:
        raise SimplexError(f"LP infeasible (phase-1 objective {-T[-1, -1]:g})")

    # Drive any artificial still basic (at value 0) out of the basis.
    for i in range(m):
        if basis[i] >= n:
            for j in range(n):
                if abs(T[i, j]) > _PIVOT_TOL:
                    _pivot(T, basis, i, j)
                    break
            # A row with no eligible pivot is redundant; it stays inert.

    # Phase 2 on the original objective, artificial columns frozen out.
    T[:, n : n + m] = 0.0
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if basis[i] < n:
            T[-1] -= c[basis[i]] * T[i]
    _run_simplex(T, basis, n)

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    return x, float(c @ x)


def transport_cost(
    mu: np.ndarray, nu: np.ndarray, cost: np.ndarray
) -> tuple[float, np.ndarray]:
    """Exact optimal-transport cost between two weight vectors of equal mass.

    Solves min sum_ij cost[i, j] * plan[i, j] over couplings of ``mu`` and
    ``nu`` (row sums mu, column sums nu).  Returns the optimal cost and plan.
    """
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    if mu.shape != (n,) or nu.shape != (m,):
        raise ValueError("shape mismatch between marginals and cost matrix")
    if abs(mu.sum() - nu.sum()) > 1e-9:
        raise ValueError("marginals carry different total mass")

    # Row-sum and column-sum constraints; the last column constraint is
    # implied by the equal totals and is dropped to keep the system full rank.
    rows = n + m - 1
    A = np.zeros((rows, n * m))
    b = np.empty(rows)
    for i in range(n):
        A[i, i * m : (i + 1) * m] = 1.0
        b[i] = mu[i]
    for j in range(m - 1):
        A[n + j, j::m] = 1.0
        b[n + j] = nu[j]
    x, value = simplex_min_eq(cost.reshape(-1), A, b)
    return value, x.reshape(n, m)
