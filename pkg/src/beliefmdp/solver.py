"""Discounted total-cost dynamic programming on the reduced model.

Finite horizon: value iteration runs backward over the reachable set of
(belief, observation) nodes with zero terminal values, producing value
tables v_0..v_T (v_t is the optimal t-steps-to-go cost, defined at every
node whose full depth-t subtree lies inside the expansion), a greedy
policy tree, and the aggregated value at the prior.  Minimization is over
a finite action set; ties resolve to the lexicographically smallest action
label, so policies are platform-independent.

``brute_force_optimal`` is the independent oracle: it enumerates all
deterministic observation-feedback policies (as action trees indexed by
observation strings, one tree per initial observation) and evaluates each
exactly by summing discounted costs over every trajectory.  Enumerating
only observation-indexed trees is exhaustive because actions prescribed at
histories are determined by past observations once the policy is fixed;
minimizing per initial observation is valid because their history sets are
disjoint.

Infinite horizon (discount < 1): value iteration on a regular simplex
lattice over beliefs, children evaluated by barycentric interpolation.
This is an approximation converging only as the resolution grows; the
returned bound certifies distance to the *grid* fixed point, not to the
true value.  The stopping rule sup-step <= tol*(1-alpha)/(2*alpha) makes
that distance at most tol/2 by the standard contraction argument.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Callable, Mapping

import numpy as np

from .measures import Dist
from .models import MDPModel, PlatzmanModel, check_valid, mdpii_from_platzman
from .reduction import (
    Belief,
    BeliefNode,
    ReachableSet,
    belief_transition,
    cost_bar,
    cost_hat,
    expand_reachable,
    initial_belief,
    qhat,
)
from .simplexgrid import SimplexGrid

__all__ = [
    "ValueTable",
    "PolicyTree",
    "StationaryGridPolicy",
    "GridSolution",
    "FiniteHorizonSolution",
    "BruteForceGuardError",
    "GridBudgetError",
    "eta",
    "greedy_actions",
    "finite_horizon_solve",
    "value_at",
    "brute_force_optimal",
    "finite_mdp_solve",
    "infinite_horizon_grid_solve",
    "write_value_tables_csv",
    "write_policy_csv",
    "write_grid_values_csv",
    "write_grid_policy_csv",
]

DEFAULT_TIE_TOL = 1e-10

#: Policy-count guard for the brute-force oracle.
BRUTE_FORCE_GUARD = 10**6

#: Guard on dense grid operators: vertex_count**2 * action_count.
GRID_BUDGET = 3 * 10**7


class BruteForceGuardError(RuntimeError):
    """The instance has too many observation-feedback policies to enumerate."""


class GridBudgetError(RuntimeError):
    """The simplex grid would exceed the dense-operator memory budget."""


@dataclass
class ValueTable:
    """Optimal values with ``epoch`` steps to go, keyed by node key."""

    epoch: int
    values: dict[tuple[bytes, str], float]

    def __getitem__(self, key: tuple[bytes, str]) -> float:
        return self.values[key]

    def at_node(self, node: BeliefNode) -> float:
        return self.values[node.key]


@dataclass
class PolicyTree:
    """Per decision epoch, a map from node key to the chosen action label."""

    actions: list[dict[tuple[bytes, str], str]]

    @property
    def horizon(self) -> int:
        return len(self.actions)

    def action(self, epoch: int, key: tuple[bytes, str]) -> str:
        return self.actions[epoch][key]


@dataclass
class StationaryGridPolicy:
    """Stationary policy on a simplex lattice over beliefs.

    Off-grid beliefs act by the policy of the L1-nearest vertex (ties to
    the lexicographically smallest composition).  Observations do not enter
    the lookup: the policy is computed for observation-free costs, where
    actions can be chosen independently of the observation.
    """

    grid: SimplexGrid
    actions: tuple[str, ...]
    interpolation: str = "freudenthal-barycentric"
    lookup: str = "nearest-vertex-l1"

    def action_at(self, z: np.ndarray, y: str | None = None) -> str:
        return self.actions[self.grid.nearest_vertex(z)]


@dataclass
class FiniteHorizonSolution:
    value: float
    per_y0: dict[str, tuple[float, float]]  # y0 -> (probability, value)
    policy: PolicyTree
    tables: list[ValueTable]  # v_0 .. v_T
    reachable: ReachableSet
    roots: dict[str, int]  # y0 -> root node id
    greedy: list[dict[tuple[bytes, str], list[str]]] = field(default_factory=list)


@dataclass
class GridSolution:
    grid: SimplexGrid
    values: np.ndarray
    policy: StationaryGridPolicy
    bound: float  # certified sup-distance to the grid fixed point
    iterations: int


def _value_fn(u) -> Callable[[Belief, str], float]:
    if isinstance(u, ValueTable):
        return lambda belief, obs: u.values[(belief.key, obs)]
    if isinstance(u, Mapping):
        return lambda belief, obs: u[(belief.key, obs)]
    if callable(u):
        return u
    raise TypeError("u must be a ValueTable, mapping, or callable")


def eta(model, u, node: BeliefNode, a: str, alpha: float) -> float:
    """One-step lookahead: averaged cost plus discounted continuation.

    ``u`` maps (belief, observation label) to a value; missing children
    raise KeyError.
    """
    if alpha < 0:
        raise ValueError("discount must be nonnegative")
    value = _value_fn(u)
    platzman = isinstance(model, PlatzmanModel)
    y_arg = None if platzman else node.obs
    total = cost_bar(model, node.belief, node.obs, a)
    if alpha > 0.0:
        acc = 0.0
        for child, p in belief_transition(model, node.belief, y_arg, a):
            acc += p * value(child.belief, child.obs)
        total += alpha * acc
    return total


def greedy_actions(
    model, u, node: BeliefNode, alpha: float, tie_tol: float = DEFAULT_TIE_TOL
) -> list[str]:
    """Actions within ``tie_tol`` of the minimal lookahead, label-sorted."""
    etas = {a: eta(model, u, node, a, alpha) for a in model.A.labels}
    best = min(etas.values())
    return sorted(a for a, v in etas.items() if v <= best + tie_tol)


def _solve_from_roots(
    model,
    roots: list[BeliefNode],
    T: int,
    alpha: float,
    *,
    cap: int,
    tie_tol: float,
) -> tuple[list[ValueTable], PolicyTree, ReachableSet, list[dict]]:
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if alpha < 0:
        raise ValueError("discount must be nonnegative")
    rs = expand_reachable(model, roots, T, cap=cap)
    n = len(rs.nodes)
    labels = model.A.labels
    n_a = len(labels)
    min_layer = rs.min_layer()

    cbar = np.empty((n, n_a))
    for nid, node in enumerate(rs.nodes):
        for a_idx, a in enumerate(labels):
            cbar[nid, a_idx] = cost_bar(model, node.belief, node.obs, a)

    # v_t is computed wherever the depth-t subtree is fully expanded.
    values: list[np.ndarray] = [np.zeros(n)]
    etas_by_horizon: list[dict[int, np.ndarray]] = [dict()]
    for t in range(1, T + 1):
        v_prev = values[-1]
        v_t = np.full(n, np.nan)
        etas: dict[int, np.ndarray] = {}
        for nid in range(n):
            if min_layer[nid] > T - t:
                continue
            row = cbar[nid].copy()
            if alpha > 0.0:
                for a_idx in range(n_a):
                    acc = 0.0
                    for cid, p in rs.edges[(nid, a_idx)]:
                        acc += p * v_prev[cid]
                    row[a_idx] += alpha * acc
            etas[nid] = row
            v_t[nid] = row.min()
        values.append(v_t)
        etas_by_horizon.append(etas)

    def key_of(nid: int) -> tuple[bytes, str]:
        return rs.nodes[nid].key

    tables = []
    for t, v_t in enumerate(values):
        entries = {
            key_of(nid): float(v_t[nid])
            for nid in range(n)
            if min_layer[nid] <= T - t
        }
        tables.append(ValueTable(t, entries))

    policy_epochs: list[dict[tuple[bytes, str], str]] = []
    greedy_epochs: list[dict[tuple[bytes, str], list[str]]] = []
    for t in range(T):
        h = T - t
        acts: dict[tuple[bytes, str], str] = {}
        greedy: dict[tuple[bytes, str], list[str]] = {}
        for nid in rs.layers[t]:
            row = etas_by_horizon[h][nid]
            best = row.min()
            tied = sorted(
                labels[a_idx] for a_idx in range(n_a) if row[a_idx] <= best + tie_tol
            )
            acts[key_of(nid)] = tied[0]
            greedy[key_of(nid)] = tied
        policy_epochs.append(acts)
        greedy_epochs.append(greedy)

    return tables, PolicyTree(policy_epochs), rs, greedy_epochs


def finite_horizon_solve(
    model,
    p: Dist,
    T: int,
    alpha: float,
    *,
    cap: int = 10**6,
    tie_tol: float = DEFAULT_TIE_TOL,
    validate: bool = True,
) -> FiniteHorizonSolution:
    """Optimal expected total discounted cost over horizon T from prior p.

    Roots are the Bayes updates of p under every initial observation; the
    returned value aggregates root values by the observation probabilities.
    Accepts observation-dependent (full) or observation-free (Platzman)
    kernels.
    """
    if validate:
        check_valid(model)
    roots: list[BeliefNode] = []
    root_info: dict[str, tuple[Belief, float]] = {}
    for y0 in model.Y.labels:
        z0, pr = initial_belief(model, p, y0)
        root_info[y0] = (z0, pr)
        roots.append(BeliefNode(z0, y0))
    tables, policy, rs, greedy = _solve_from_roots(
        model, roots, T, alpha, cap=cap, tie_tol=tie_tol
    )
    per_y0: dict[str, tuple[float, float]] = {}
    root_ids: dict[str, int] = {}
    total = 0.0
    for y0, (z0, pr) in root_info.items():
        node = BeliefNode(z0, y0)
        root_ids[y0] = rs.node_id(node)
        v = tables[T].at_node(node)
        per_y0[y0] = (pr, v)
        total += pr * v
    return FiniteHorizonSolution(
        float(total), per_y0, policy, tables, rs, root_ids, greedy
    )


def value_at(
    model, belief: Belief, y0: str, T: int, alpha: float, *, cap: int = 10**6
) -> float:
    """Optimal T-horizon value of a single reduced state (belief, y0)."""
    node = BeliefNode(belief, y0)
    tables, _, _, _ = _solve_from_roots(
        model, [node], T, alpha, cap=cap, tie_tol=DEFAULT_TIE_TOL
    )
    return tables[T].at_node(node)


# ----------------------------------------------------------------- brute force


def _action_trees(n_actions: int, n_nodes: int):
    """All assignments of actions to the n_nodes tree slots."""
    idx = np.arange(n_actions)
    grids = np.meshgrid(*([idx] * n_nodes), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def brute_force_optimal(model, p: Dist, T: int, alpha: float) -> float:
    """Exhaustive minimum over deterministic observation-feedback policies.

    Policies are trees: a slot per observation string of length < T, one
    tree per initial observation.  Each candidate is scored by enumerating
    every trajectory (w_0, y_0, ..., w_T, y_T), multiplying kernel entries
    along it and summing discounted costs.  Guarded at
    ``BRUTE_FORCE_GUARD`` trees per initial observation.
    """
    if isinstance(model, PlatzmanModel):
        model = mdpii_from_platzman(model)
    check_valid(model)
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if T == 0:
        return 0.0
    nw, ny, na = model.sizes
    n_slots = sum(ny**t for t in range(T))
    if float(na) ** n_slots > BRUTE_FORCE_GUARD:
        raise BruteForceGuardError(
            f"{na}^{n_slots} observation-feedback trees per initial observation "
            f"exceed the {BRUTE_FORCE_GUARD} guard; use a smaller instance"
        )
    if float(nw) ** (T + 1) * float(ny) ** T > 2 * 10**6:
        raise BruteForceGuardError(
            "trajectory enumeration too large; use a smaller instance"
        )

    # Slot ids for observation strings of length < T, breadth-first.
    slot_of: dict[tuple[int, ...], int] = {(): 0}
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(1, T):
        frontier = [s + (y,) for s in frontier for y in range(ny)]
        for s in frontier:
            slot_of[s] = len(slot_of)

    # All unobservable trajectories w_0..w_T as index columns.
    w_paths = np.stack(
        [g.reshape(-1) for g in np.meshgrid(*([np.arange(nw)] * (T + 1)), indexing="ij")],
        axis=1,
    )
    discounts = alpha ** np.arange(T)
    y_paths = [
        tuple(s)
        for s in np.stack(
            [g.reshape(-1) for g in np.meshgrid(*([np.arange(ny)] * T), indexing="ij")],
            axis=1,
        )
    ]
    a_seqs = np.stack(
        [g.reshape(-1) for g in np.meshgrid(*([np.arange(na)] * T), indexing="ij")],
        axis=1,
    )
    a_powers = na ** np.arange(T - 1, -1, -1)

    trees = _action_trees(na, n_slots)
    total_value = 0.0
    for y0 in range(ny):
        pr_y0 = float(p.weights @ model.P0[:, y0])
        if pr_y0 == 0.0:
            continue
        base = p.weights[w_paths[:, 0]] * model.P0[w_paths[:, 0], y0]
        # Exact contribution of every (observation string, action sequence):
        # trajectory probabilities times discounted costs, summed over all
        # unobservable paths.  Trees are then scored by table lookups.
        contrib = np.empty((len(y_paths), len(a_seqs)))
        for iy, ys in enumerate(y_paths):
            y_seq = (y0,) + ys
            for ia, aseq in enumerate(a_seqs):
                prob = base.copy()
                cost = np.zeros(len(w_paths))
                for t in range(T):
                    a = int(aseq[t])
                    cost += discounts[t] * model.cost[w_paths[:, t], y_seq[t], a]
                    prob *= model.P[
                        w_paths[:, t], y_seq[t], a, w_paths[:, t + 1], y_seq[t + 1]
                    ]
                contrib[iy, ia] = float(prob @ cost)
        tree_values = np.zeros(len(trees))
        for iy, ys in enumerate(y_paths):
            slots = [slot_of[ys[:t]] for t in range(T)]
            indices = trees[:, slots] @ a_powers
            tree_values += contrib[iy, indices]
        total_value += float(tree_values.min())
    return float(total_value)


# ------------------------------------------------------------- observable MDP


def finite_mdp_solve(
    model: MDPModel,
    alpha: float,
    tol: float,
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    validate: bool = True,
) -> tuple[np.ndarray, list[str], float]:
    """Discounted value iteration for a fully observable model.

    Returns (values, stationary policy, certified fixed-point bound).
    """
    if validate:
        check_valid(model)
    if not 0.0 <= alpha < 1.0:
        raise ValueError("infinite-horizon solving requires discount in [0, 1)")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    nx, na = model.cost.shape
    v = np.zeros(nx)
    threshold = np.inf if alpha == 0.0 else tol * (1.0 - alpha) / (2.0 * alpha)
    while True:
        q = model.cost + alpha * np.einsum("xay,y->xa", model.kernel, v)
        v_new = q.min(axis=1)
        step = float(np.abs(v_new - v).max())
        v = v_new
        if step <= threshold:
            break
    bound = 0.0 if alpha == 0.0 else alpha / (1.0 - alpha) * step
    policy = []
    q = model.cost + alpha * np.einsum("xay,y->xa", model.kernel, v)
    for x in range(nx):
        best = q[x].min()
        tied = sorted(
            model.A.labels[a] for a in range(na) if q[x, a] <= best + tie_tol
        )
        policy.append(tied[0])
    return v, policy, bound


# ------------------------------------------------------------------- grid VI


def infinite_horizon_grid_solve(
    model: PlatzmanModel,
    k: int,
    alpha: float,
    tol: float,
    *,
    tie_tol: float = DEFAULT_TIE_TOL,
    validate: bool = True,
) -> GridSolution:
    """Approximate stationary solution on the belief simplex lattice.

    Requires an observation-free cost table (the reduction runs over
    beliefs alone).  Transition operators are assembled once: for every
    vertex and action, the posterior children are interpolated
    barycentrically back onto the lattice.  Grid values converge to the
    true value function only as k grows; no rate is claimed.
    """
    if validate:
        check_valid(model)
    if not isinstance(model, PlatzmanModel):
        raise TypeError("grid solving needs an observation-independent kernel")
    if not 0.0 <= alpha < 1.0:
        raise ValueError("infinite-horizon solving requires discount in [0, 1)")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if not model.cost_is_observation_free():
        raise ValueError("grid solving requires observation-free costs")
    nw = len(model.W)
    na = len(model.A)
    grid = SimplexGrid(nw, k)
    n_v = len(grid)
    if n_v * n_v * na > GRID_BUDGET:
        raise GridBudgetError(
            f"{n_v} vertices x {na} actions exceeds the dense operator budget"
        )

    operators = np.zeros((na, n_v, n_v))
    costs = np.empty((n_v, na))
    points = grid.points
    for vid in range(n_v):
        z = Belief(Dist(model.W, points[vid]))
        for a_idx, a in enumerate(model.A.labels):
            costs[vid, a_idx] = cost_hat(model, z, a)
            for child, pch in qhat(model, z, a):
                for wid, wgt in grid.barycentric(child.weights):
                    operators[a_idx, vid, wid] += pch * wgt

    v = np.zeros(n_v)
    threshold = np.inf if alpha == 0.0 else tol * (1.0 - alpha) / (2.0 * alpha)
    iterations = 0
    while True:
        q = costs + alpha * np.stack([operators[a] @ v for a in range(na)], axis=1)
        v_new = q.min(axis=1)
        step = float(np.abs(v_new - v).max())
        v = v_new
        iterations += 1
        if step <= threshold:
            break
    bound = 0.0 if alpha == 0.0 else alpha / (1.0 - alpha) * step

    q = costs + alpha * np.stack([operators[a] @ v for a in range(na)], axis=1)
    actions = []
    for vid in range(n_v):
        best = q[vid].min()
        tied = sorted(
            model.A.labels[a] for a in range(na) if q[vid, a] <= best + tie_tol
        )
        actions.append(tied[0])
    policy = StationaryGridPolicy(grid, tuple(actions))
    return GridSolution(grid, v, policy, bound, iterations)


# -------------------------------------------------------------------- exports


def write_value_tables_csv(
    tables: list[ValueTable], rs: ReachableSet, out: IO[str]
) -> None:
    """Value tables keyed by node id: node_id, steps_to_go, value."""
    w = csv.writer(out)
    w.writerow(["node_id", "steps_to_go", "value"])
    for table in tables:
        for key, value in table.values.items():
            w.writerow([rs.node_index[key], table.epoch, repr(value)])


def write_policy_csv(policy: PolicyTree, rs: ReachableSet, out: IO[str]) -> None:
    """Policy tree keyed by node id: epoch, node_id, action."""
    w = csv.writer(out)
    w.writerow(["epoch", "node_id", "action"])
    for epoch, acts in enumerate(policy.actions):
        for key, action in acts.items():
            w.writerow([epoch, rs.node_index[key], action])


def write_grid_values_csv(sol: GridSolution, out: IO[str], labels) -> None:
    """Grid values keyed by lattice coordinates: n_<label>..., value."""
    w = csv.writer(out)
    w.writerow([f"n_{l}" for l in labels] + ["value"])
    for vid, comp in enumerate(sol.grid.vertices):
        w.writerow([int(c) for c in comp] + [repr(float(sol.values[vid]))])


def write_grid_policy_csv(sol: GridSolution, out: IO[str], labels) -> None:
    """Grid policy keyed by lattice coordinates: n_<label>..., action."""
    w = csv.writer(out)
    w.writerow([f"n_{l}" for l in labels] + ["action"])
    for vid, comp in enumerate(sol.grid.vertices):
        w.writerow([int(c) for c in comp] + [sol.policy.actions[vid]])
