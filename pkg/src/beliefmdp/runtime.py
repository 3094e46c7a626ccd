"""Model file I/O, seeded simulation, Monte Carlo evaluation, and lifting
belief policies to history policies.

Reproducibility: all randomness flows through numpy's PCG64 bit generator.
A single simulation seeded with ``seed`` draws its uniforms from
``Generator(PCG64(SeedSequence(seed)))``; run ``i`` of a Monte Carlo batch
with master seed ``s`` uses ``SeedSequence((s, i))``, so any run can be
replayed bit-for-bit in isolation.  Each run consumes exactly T + 2
uniforms (initial state, initial observation, one joint transition per
step); the stepping itself is deterministic given those uniforms and runs
on either kernel backend with bit-identical results.

A lifted history policy plays a belief-space policy through a Bayes
filter: actions depend on the observed history only through the filtered
belief (and the current observation).  Policy-tree lifts compile the
reachable set into index tables so batches avoid per-step dictionary work;
the stateful filter interface recomputes posteriors step by step and is
checked against the reduction chain by the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import BACKEND, kernels
from .measures import Dist, FiniteSpace
from .models import (
    MDPIIModel,
    MDPModel,
    PlatzmanModel,
    POMDP1Spec,
    POMDP2Spec,
    check_valid,
    mdpii_from_platzman,
    platzman_from_pomdp1,
    platzman_from_pomdp2,
)
from .reduction import Belief, BeliefNode, expand_reachable, initial_belief, posterior
from .solver import PolicyTree, StationaryGridPolicy

__all__ = [
    "Trajectory",
    "TrajectoryStep",
    "TreeHistoryPolicy",
    "GridHistoryPolicy",
    "LiftError",
    "ModelFormatError",
    "load_model",
    "loads_model",
    "model_to_dict",
    "lift_policy",
    "simulate",
    "monte_carlo_value",
    "BACKEND",
]


# ------------------------------------------------------------------ model I/O


class ModelFormatError(ValueError):
    """The model document is structurally wrong (fields, shapes, kinds)."""


_KINDS = ("mdp", "mdpii", "platzman", "pomdp1", "pomdp2")


def _get(doc: dict, field: str):
    if field not in doc:
        raise ModelFormatError(f"missing field {field!r}")
    return doc[field]


def _space_from(doc: dict, name: str, metric_key: str | None = None) -> FiniteSpace:
    spaces = _get(doc, "spaces")
    if name not in spaces:
        raise ModelFormatError(f"missing space {name!r} in 'spaces'")
    labels = tuple(str(l) for l in spaces[name])
    metric = spaces.get(metric_key) if metric_key else None
    try:
        return FiniteSpace(labels, None if metric is None else np.asarray(metric, float))
    except ValueError as e:
        raise ModelFormatError(f"space {name!r}: {e}") from None


def _array(doc: dict, field: str, shape: tuple[int, ...]) -> np.ndarray:
    raw = _get(doc, field)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as e:
        raise ModelFormatError(f"field {field!r}: {e}") from None
    if arr.shape != shape:
        raise ModelFormatError(
            f"field {field!r}: expected shape {shape}, got {arr.shape}"
        )
    return arr


def loads_model(text: str, *, validate: bool = True):
    """Parse a model document (JSON text).  See the README for the schema.

    Raises :class:`json.JSONDecodeError` (with line/column) on broken JSON,
    :class:`ModelFormatError` on schema problems, and
    :class:`~beliefmdp.models.ModelValidationError` listing numeric
    violations when ``validate`` is set.
    """
    doc = json.loads(text)
    kind = _get(doc, "kind")
    if kind not in _KINDS:
        raise ModelFormatError(f"unknown kind {kind!r}; expected one of {_KINDS}")
    discount = float(_get(doc, "discount"))

    if kind == "mdp":
        X = _space_from(doc, "x", "x_metric")
        A = _space_from(doc, "a")
        nx, na = len(X), len(A)
        model = MDPModel(
            X,
            A,
            _array(doc, "transition", (nx, na, nx)),
            _array(doc, "cost", (nx, na)),
            discount,
        )
    else:
        W = _space_from(doc, "w", "w_metric")
        Y = _space_from(doc, "y", "y_metric")
        A = _space_from(doc, "a")
        nw, ny, na = len(W), len(Y), len(A)
        P0 = _array(doc, "initial_observation", (nw, ny))
        cost = _array(doc, "cost", (nw, ny, na))
        if kind == "mdpii":
            model = MDPIIModel(
                W, Y, A, _array(doc, "transition", (nw, ny, na, nw, ny)), P0, cost, discount
            )
        elif kind == "platzman":
            model = PlatzmanModel(
                W, Y, A, _array(doc, "transition", (nw, na, nw, ny)), P0, cost, discount
            )
        elif kind == "pomdp1":
            model = POMDP1Spec(
                W,
                Y,
                A,
                _array(doc, "transition", (nw, na, nw)),
                _array(doc, "observation", (nw, na, ny)),
                P0,
                cost,
                discount,
            )
        else:
            model = POMDP2Spec(
                W,
                Y,
                A,
                _array(doc, "transition", (nw, na, nw)),
                _array(doc, "observation", (na, nw, ny)),
                P0,
                cost,
                discount,
            )
    if validate:
        check_valid(model)
    return model


def load_model(path, *, validate: bool = True):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read(), validate=validate)


def model_to_dict(model) -> dict:
    """Inverse of :func:`loads_model` (arrays become nested lists)."""
    if isinstance(model, MDPModel):
        doc = {
            "kind": "mdp",
            "spaces": {"x": list(model.X.labels), "a": list(model.A.labels)},
            "transition": model.kernel.tolist(),
            "cost": model.cost.tolist(),
            "discount": model.discount,
        }
        if model.X.metric is not None:
            doc["spaces"]["x_metric"] = model.X.metric.tolist()
        return doc
    kinds = {
        MDPIIModel: "mdpii",
        PlatzmanModel: "platzman",
        POMDP1Spec: "pomdp1",
        POMDP2Spec: "pomdp2",
    }
    kind = kinds[type(model)]
    doc = {
        "kind": kind,
        "spaces": {
            "w": list(model.W.labels),
            "y": list(model.Y.labels),
            "a": list(model.A.labels),
        },
        "cost": model.cost.tolist(),
        "discount": model.discount,
        "initial_observation": model.P0.tolist(),
    }
    if model.W.metric is not None:
        doc["spaces"]["w_metric"] = model.W.metric.tolist()
    if model.Y.metric is not None:
        doc["spaces"]["y_metric"] = model.Y.metric.tolist()
    if kind in ("mdpii", "platzman"):
        doc["transition"] = model.P.tolist()
    elif kind == "pomdp1":
        doc["transition"] = model.P1.tolist()
        doc["observation"] = model.Q1.tolist()
    else:
        doc["transition"] = model.P2.tolist()
        doc["observation"] = model.Q2.tolist()
    return doc


def as_full_model(model) -> MDPIIModel | PlatzmanModel:
    """Collapse factored specs; full and Platzman models pass through."""
    if isinstance(model, POMDP1Spec):
        return platzman_from_pomdp1(model)
    if isinstance(model, POMDP2Spec):
        return platzman_from_pomdp2(model)
    if isinstance(model, (MDPIIModel, PlatzmanModel)):
        return model
    raise TypeError(f"cannot simulate a {type(model).__name__} directly")


# ----------------------------------------------------------------- trajectories


@dataclass(frozen=True)
class TrajectoryStep:
    t: int
    w: str
    y: str
    a: str
    cost: float


@dataclass(frozen=True)
class Trajectory:
    """One simulated run: per-step records plus the discounted total.

    ``seed`` is the SeedSequence entropy that reproduces the run;
    ``discounted_total`` accumulates alpha^t * cost_t in step order.
    """

    seed: object
    steps: tuple[TrajectoryStep, ...]
    discounted_total: float
    initial: tuple[str, str]  # (w0, y0) even when there are no steps


class LiftError(RuntimeError):
    """A belief-policy lift cannot cover the requested history."""


def _full_tables(model):
    """(P0, Pfull, Pflat, cost) as contiguous float arrays; Platzman
    kernels are broadcast across the observable coordinate."""
    if isinstance(model, PlatzmanModel):
        model = mdpii_from_platzman(model)
    nw, ny, na = model.sizes
    Pfull = np.ascontiguousarray(model.P)
    Pflat = np.ascontiguousarray(Pfull.reshape(nw, ny, na, nw * ny))
    return (
        np.ascontiguousarray(model.P0),
        Pfull,
        Pflat,
        np.ascontiguousarray(model.cost),
    )


class TreeHistoryPolicy:
    """History policy backed by a policy tree over the reachable set.

    The lift re-expands the reachable set of the prior (the expansion is
    deterministic, so node identities match the solve that produced the
    policy) and compiles per-epoch action tables plus child pointers.  The
    stateful interface (``begin``/``action``/``observe``) runs the Bayes
    filter explicitly and is what ``beliefs`` reports.
    """

    def __init__(self, model, policy: PolicyTree, prior: Dist):
        self.model = as_full_model(model)
        self.policy = policy
        self.prior = prior
        self.horizon = policy.horizon
        rs = expand_reachable(
            self.model,
            [
                BeliefNode(initial_belief(self.model, prior, y0)[0], y0)
                for y0 in self.model.Y.labels
            ],
            self.horizon,
        )
        self.reachable = rs
        ny = len(self.model.Y)
        na = len(self.model.A)
        n = len(rs.nodes)
        self.actions_table = np.full((max(self.horizon, 1), n), -1, dtype=np.int64)
        self.child_table = np.full((n, na, ny), -1, dtype=np.int64)
        self.root_table = np.full(ny, -1, dtype=np.int64)
        a_index = {a: i for i, a in enumerate(self.model.A.labels)}
        for y_i, y0 in enumerate(self.model.Y.labels):
            z0, _ = initial_belief(self.model, prior, y0)
            self.root_table[y_i] = rs.node_id(BeliefNode(z0, y0))
        for t in range(self.horizon):
            epoch = policy.actions[t]
            for nid in rs.layers[t]:
                key = rs.nodes[nid].key
                if key not in epoch:
                    node = rs.nodes[nid]
                    raise LiftError(
                        f"policy tree lacks an action at epoch {t} for the "
                        f"reachable state (belief={node.belief.weights.tolist()}, "
                        f"obs={node.obs!r})"
                    )
                self.actions_table[t, nid] = a_index[epoch[key]]
        for (nid, a_idx), kids in rs.edges.items():
            for cid, _ in kids:
                y_i = self.model.Y.index(rs.nodes[cid].obs)
                self.child_table[nid, a_idx, y_i] = cid
        self._t = 0
        self._belief: Belief | None = None
        self._obs: str | None = None
        self._history: list[str] = []

    # Stateful filter interface -------------------------------------------

    def begin(self, y0: str) -> None:
        z0, _ = initial_belief(self.model, self.prior, y0)
        self._belief, self._obs, self._t = z0, y0, 0
        self._history = [y0]

    @property
    def belief(self) -> Belief:
        if self._belief is None:
            raise RuntimeError("begin() not called")
        return self._belief

    def action(self) -> str:
        key = (self.belief.key, self._obs)
        epoch = self.policy.actions[self._t]
        if key not in epoch:
            raise LiftError(
                f"belief off the policy tree after history {self._history!r} "
                f"at epoch {self._t}"
            )
        return epoch[key]

    def observe(self, y_next: str) -> None:
        a = self.action()
        y_arg = None if isinstance(self.model, PlatzmanModel) else self._obs
        self._belief = posterior(self.model, self._belief, y_arg, a, y_next)
        self._obs = y_next
        self._t += 1
        self._history += [a, y_next]

    # Batch tables ---------------------------------------------------------

    def kernel_args(self):
        P0, Pfull, Pflat, cost = _full_tables(self.model)
        return dict(
            P0=P0,
            Pflat=Pflat,
            cost=cost,
            actions=self.actions_table,
            child=self.child_table,
            root=self.root_table,
        )


class GridHistoryPolicy:
    """History policy backed by a stationary grid policy and a Bayes filter."""

    def __init__(self, model, policy: StationaryGridPolicy, prior: Dist):
        self.model = as_full_model(model)
        if not isinstance(self.model, PlatzmanModel):
            # Stationary grid policies ignore observations, which is only
            # optimal when kernels and costs do; require that structure.
            raise LiftError("grid policies lift only observation-free models")
        self.policy = policy
        self.prior = prior
        self.horizon = None  # stationary
        self._belief: Belief | None = None
        self._obs: str | None = None

    def begin(self, y0: str) -> None:
        z0, _ = initial_belief(self.model, self.prior, y0)
        self._belief, self._obs = z0, y0

    @property
    def belief(self) -> Belief:
        if self._belief is None:
            raise RuntimeError("begin() not called")
        return self._belief

    def action(self) -> str:
        return self.policy.action_at(self.belief.weights, self._obs)

    def observe(self, y_next: str) -> None:
        a = self.action()
        self._belief = posterior(self.model, self._belief, None, a, y_next)
        self._obs = y_next

    def kernel_args(self):
        P0, Pfull, _, cost = _full_tables(self.model)
        grid = self.policy.grid
        a_index = {a: i for i, a in enumerate(self.model.A.labels)}
        return dict(
            P0=P0,
            Pfull=Pfull,
            cost=cost,
            vertices=np.ascontiguousarray(grid.points),
            vertex_actions=np.array(
                [a_index[a] for a in self.policy.actions], dtype=np.int64
            ),
        )


def lift_policy(model, belief_policy, p: Dist):
    """Turn a belief-space policy into a history policy for the model.

    Policy trees must cover every belief reachable from ``p`` within their
    horizon; stationary grid policies are total by construction.
    """
    if isinstance(belief_policy, PolicyTree):
        return TreeHistoryPolicy(model, belief_policy, p)
    if isinstance(belief_policy, StationaryGridPolicy):
        return GridHistoryPolicy(model, belief_policy, p)
    raise TypeError(f"cannot lift a {type(belief_policy).__name__}")


# ------------------------------------------------------------------ simulation


def _uniforms_for(seed, T: int, n: int = 1) -> np.ndarray:
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return gen.random((n, T + 2))


def _run_batch(policy, T: int, alpha: float, uniforms: np.ndarray, record: bool):
    args = policy.kernel_args()
    p = np.ascontiguousarray(policy.prior.weights)
    if isinstance(policy, TreeHistoryPolicy):
        if T > policy.horizon:
            raise ValueError(
                f"policy tree covers {policy.horizon} epochs, asked for {T}"
            )
        actions = args["actions"][:max(T, 1)]
        return kernels.run_tree_trajectories(
            p,
            args["P0"],
            args["Pflat"],
            args["cost"],
            alpha,
            T,
            np.ascontiguousarray(actions),
            args["child"],
            args["root"],
            uniforms,
            record,
        )
    return kernels.run_grid_trajectories(
        p,
        args["P0"],
        args["Pfull"],
        args["cost"],
        alpha,
        T,
        args["vertices"],
        args["vertex_actions"],
        uniforms,
        record,
    )


def simulate(model, policy, p: Dist, T: int, alpha: float, seed) -> Trajectory:
    """One seeded run; bit-identical on replay and across kernel backends.

    ``policy`` is a lifted history policy (or a PolicyTree /
    StationaryGridPolicy, lifted on the fly).  ``seed`` may be an int or a
    tuple; Monte Carlo run ``i`` with master seed ``s`` replays as
    ``seed=(s, i)``.
    """
    if not isinstance(policy, (TreeHistoryPolicy, GridHistoryPolicy)):
        policy = lift_policy(model, policy, p)
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    uniforms = _uniforms_for(seed, T)
    totals, w_path, y_path, a_path, costs = _run_batch(
        policy, T, alpha, uniforms, record=True
    )
    m = policy.model
    steps = tuple(
        TrajectoryStep(
            t,
            m.W.labels[w_path[0, t]],
            m.Y.labels[y_path[0, t]],
            m.A.labels[a_path[0, t]],
            float(costs[0, t]),
        )
        for t in range(T)
    )
    initial = (m.W.labels[w_path[0, 0]], m.Y.labels[y_path[0, 0]])
    return Trajectory(seed, steps, float(totals[0]), initial)


def monte_carlo_value(
    model, policy, p: Dist, T: int, alpha: float, N: int, seed
) -> tuple[float, float]:
    """Mean and standard error of the discounted total over N seeded runs.

    Run ``i`` draws its uniforms from ``SeedSequence((seed, i))``; the
    whole batch is reproducible from the master seed alone, and any single
    run can be replayed with :func:`simulate`.
    """
    if N < 2:
        raise ValueError("need at least two runs for a standard error")
    if not isinstance(policy, (TreeHistoryPolicy, GridHistoryPolicy)):
        policy = lift_policy(model, policy, p)
    uniforms = np.empty((N, T + 2))
    for i in range(N):
        uniforms[i] = _uniforms_for((seed, i), T)[0]
    totals = _run_batch(policy, T, alpha, uniforms, record=False)
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / np.sqrt(N))
    return mean, stderr
