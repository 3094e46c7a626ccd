"""Exact belief-state reduction for finite models.

A model with unobservable component w is reduced to a completely
observable one whose states are pairs (z, y): z is the posterior
distribution of w given the observed history and y is the last
observation.  On finite spaces every object below is computed exactly:

* ``joint_next`` -- the one-step joint distribution of (w', y') given
  (z, y, a), obtained by averaging the kernel over z;
* ``posterior`` -- the Bayes update of z after observing y', the quotient
  of ``joint_next`` by its observation marginal;
* ``belief_transition`` -- the finitely supported distribution of the next
  reduced state ((z', y'), probability);
* ``expand_reachable`` -- the set of reduced states reachable from given
  roots within a horizon, deduplicated by a quantized belief fingerprint.

Observations with zero probability leave the Bayes quotient undefined; the
update is made total by returning the predicted belief (the marginal of
``joint_next`` over observations) and flagging the result, so tests can
exclude those branches.

For Platzman models (kernels that ignore y) the observable argument is
dropped; pass ``y=None``.  ``qhat``/``cost_hat`` provide the smaller
reduction over beliefs alone when costs do not depend on observations.

All operations are pure; expansion is sequential with stable, first-seen
ordering, so results are deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .measures import Dist, product_space
from .models import MDPIIModel, PlatzmanModel

__all__ = [
    "Belief",
    "BeliefNode",
    "ReachableSet",
    "ReachableCapError",
    "belief_key",
    "joint_next",
    "obs_marginal",
    "posterior",
    "belief_transition",
    "cost_bar",
    "qhat",
    "cost_hat",
    "initial_belief",
    "expand_reachable",
    "write_nodes_csv",
    "write_edges_csv",
]

#: Belief weights are rounded to this grid to build deduplication keys.
KEY_GRID = 1e-12

DEFAULT_NODE_CAP = 10**6


def belief_key(weights: np.ndarray) -> bytes:
    """Quantized fingerprint: weights rounded to the 1e-12 grid.

    Equal keys imply componentwise weight differences of at most 2e-12;
    exact weights are kept for arithmetic.
    """
    return np.rint(np.asarray(weights) / KEY_GRID).astype(np.int64).tobytes()


@dataclass(frozen=True)
class Belief:
    """A distribution over the unobservable component with a canonical key.

    ``fallback`` marks beliefs produced by the zero-probability-observation
    branch of the Bayes update; it does not participate in equality.
    """

    dist: Dist
    fallback: bool = field(default=False, compare=False)

    @property
    def weights(self) -> np.ndarray:
        return self.dist.weights

    @property
    def key(self) -> bytes:
        return belief_key(self.dist.weights)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Belief):
            return NotImplemented
        return self.dist.space == other.dist.space and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)


@dataclass(frozen=True)
class BeliefNode:
    """A reduced state: belief over w plus the current observation label."""

    belief: Belief
    obs: str

    @property
    def key(self) -> tuple[bytes, str]:
        return self.belief.key, self.obs


class ReachableCapError(RuntimeError):
    """Node budget exceeded while expanding; carries the offending layer."""

    def __init__(self, layer: int, cap: int):
        self.layer = layer
        self.cap = cap
        super().__init__(f"node cap {cap} exceeded while building layer {layer}")


def _model_axes(model, y: str | None):
    """Kernel slice accessor (by action index) for either model arity."""
    if isinstance(model, MDPIIModel):
        if y is None:
            raise ValueError("this model's kernel depends on y; pass an observation")
        y_idx = model.Y.index(y)
        return lambda a_idx: model.P[:, y_idx, a_idx]
    if isinstance(model, PlatzmanModel):
        # The kernel ignores the observable part; y may be omitted.
        return lambda a_idx: model.P[:, a_idx]
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _joint_table(model, z_weights: np.ndarray, y: str | None, a: str) -> np.ndarray:
    slice_for = _model_axes(model, y)
    a_idx = model.A.index(a)
    table = slice_for(a_idx)  # (w, w', y')
    return np.einsum("w,wky->ky", z_weights, table)


def joint_next(model, z: Belief, y: str | None, a: str) -> Dist:
    """Joint one-step distribution of (w', y') given the reduced state.

    Returned on the product label space of W and Y, row-major in w'.
    """
    table = _joint_table(model, z.weights, y, a)
    return Dist(product_space(model.W, model.Y), table.reshape(-1))


def obs_marginal(model, z: Belief, y: str | None, a: str) -> Dist:
    """Distribution of the next observation: ``joint_next`` summed over w'."""
    table = _joint_table(model, z.weights, y, a)
    return Dist(model.Y, table.sum(axis=0))


def _posterior_weights(
    table: np.ndarray, y_next_idx: int
) -> tuple[np.ndarray, float, bool]:
    """Bayes quotient for one observation column of a joint table.

    Returns (weights, observation probability, fallback flag).  The
    fallback branch returns the predicted belief (marginal over
    observations), which is already normalized.
    """
    col = table[:, y_next_idx]
    m = float(col.sum())
    if m > 0.0:
        return col / m, m, False
    return table.sum(axis=1), 0.0, True


def posterior(model, z: Belief, y: str | None, a: str, y_next: str) -> Belief:
    """Posterior belief after observing ``y_next``; total via the fallback."""
    table = _joint_table(model, z.weights, y, a)
    w, _, fb = _posterior_weights(table, model.Y.index(y_next))
    return Belief(Dist(model.W, w), fallback=fb)


def belief_transition(
    model, z: Belief, y: str | None, a: str
) -> list[tuple[BeliefNode, float]]:
    """Distribution of the next reduced state (z', y').

    Support runs over observations with positive probability; entries with
    identical (belief key, y') are merged.  Probabilities sum to one.
    """
    table = _joint_table(model, z.weights, y, a)
    out: list[tuple[BeliefNode, float]] = []
    index: dict[tuple[bytes, str], int] = {}
    for y_idx, y_label in enumerate(model.Y.labels):
        w, prob, fb = _posterior_weights(table, y_idx)
        if fb:
            continue
        node = BeliefNode(Belief(Dist(model.W, w)), y_label)
        slot = index.get(node.key)
        if slot is None:
            index[node.key] = len(out)
            out.append((node, prob))
        else:
            out[slot] = (out[slot][0], out[slot][1] + prob)
    return out


def cost_bar(model, z: Belief, y: str, a: str) -> float:
    """One-step cost averaged over the belief; affine in z."""
    y_idx = model.Y.index(y)
    a_idx = model.A.index(a)
    return float(z.weights @ model.cost[:, y_idx, a_idx])


def qhat(model: PlatzmanModel, z: Belief, a: str) -> list[tuple[Belief, float]]:
    """Belief-only transition for Platzman models: observations integrated
    out, beliefs with equal keys merged."""
    if not isinstance(model, PlatzmanModel):
        raise TypeError("qhat is defined for Platzman models")
    out: list[tuple[Belief, float]] = []
    index: dict[bytes, int] = {}
    for node, prob in belief_transition(model, z, None, a):
        slot = index.get(node.belief.key)
        if slot is None:
            index[node.belief.key] = len(out)
            out.append((node.belief, prob))
        else:
            out[slot] = (out[slot][0], out[slot][1] + prob)
    return out


def cost_hat(model: PlatzmanModel, z: Belief, a: str) -> float:
    """Belief-averaged cost for observation-free cost tables."""
    if not isinstance(model, PlatzmanModel):
        raise TypeError("cost_hat is defined for Platzman models")
    if not model.cost_is_observation_free():
        raise ValueError("cost table depends on observations; cost_hat undefined")
    a_idx = model.A.index(a)
    return float(z.weights @ model.cost[:, 0, a_idx])


def initial_belief(model, p: Dist, y0: str) -> tuple[Belief, float]:
    """Bayes update of the prior p on seeing the initial observation.

    Returns (belief, probability of y0).  A zero-probability observation
    falls back to p itself, flagged.
    """
    y_idx = model.Y.index(y0)
    likelihood = model.P0[:, y_idx]
    pr = float(p.weights @ likelihood)
    if pr > 0.0:
        return Belief(Dist(model.W, p.weights * likelihood / pr)), pr
    return Belief(p, fallback=True), 0.0


@dataclass
class ReachableSet:
    """Reduced states reachable within a horizon, with transition edges.

    ``nodes`` deduplicates globally by (belief key, observation); a node
    reachable at several epochs appears in each such layer under one id.
    ``edges`` maps (node id, action index) to children with probabilities
    summing to one; they are recorded for every node of layers 0..T-1.
    """

    model: object
    nodes: list[BeliefNode]
    layers: list[list[int]]
    edges: dict[tuple[int, int], list[tuple[int, float]]]
    node_index: dict[tuple[bytes, str], int]

    def node_id(self, node: BeliefNode) -> int:
        return self.node_index[node.key]

    @property
    def horizon(self) -> int:
        return len(self.layers) - 1

    def min_layer(self) -> list[int]:
        """Earliest epoch at which each node appears."""
        first = [len(self.layers)] * len(self.nodes)
        for t, layer in enumerate(self.layers):
            for nid in layer:
                first[nid] = min(first[nid], t)
        return first


def expand_reachable(
    model,
    roots: Iterable[BeliefNode],
    T: int,
    *,
    cap: int = DEFAULT_NODE_CAP,
) -> ReachableSet:
    """Breadth-first expansion of the reduced model for T epochs.

    Layer 0 is the deduplicated roots; layer t+1 collects the
    ``belief_transition`` children of layer t under every action.  Raises
    :class:`ReachableCapError` when the global node count passes ``cap``.
    """
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    platzman = isinstance(model, PlatzmanModel)
    nodes: list[BeliefNode] = []
    node_index: dict[tuple[bytes, str], int] = {}
    edges: dict[tuple[int, int], list[tuple[int, float]]] = {}

    def register(node: BeliefNode, layer: int) -> int:
        nid = node_index.get(node.key)
        if nid is None:
            nid = len(nodes)
            if nid >= cap:
                raise ReachableCapError(layer, cap)
            nodes.append(node)
            node_index[node.key] = nid
        return nid

    layer0: list[int] = []
    for root in roots:
        nid = register(root, 0)
        if nid not in layer0:
            layer0.append(nid)
    if not layer0:
        raise ValueError("need at least one root")
    layers = [layer0]

    for t in range(T):
        next_layer: list[int] = []
        seen: set[int] = set()
        for nid in layers[t]:
            node = nodes[nid]
            for a_idx, a_label in enumerate(model.A.labels):
                if (nid, a_idx) not in edges:
                    y_arg = None if platzman else node.obs
                    kids = belief_transition(model, node.belief, y_arg, a_label)
                    edges[(nid, a_idx)] = [
                        (register(child, t + 1), p) for child, p in kids
                    ]
                for cid, _ in edges[(nid, a_idx)]:
                    if cid not in seen:
                        seen.add(cid)
                        next_layer.append(cid)
        layers.append(next_layer)
    return ReachableSet(model, nodes, layers, edges, node_index)


def write_nodes_csv(rs: ReachableSet, out: IO[str]) -> None:
    """Node table: node id, epoch, belief weights (one column per label),
    observation label.  One row per (node, epoch) membership."""
    w = csv.writer(out)
    w.writerow(
        ["node_id", "epoch"]
        + [f"belief_{l}" for l in rs.model.W.labels]
        + ["obs"]
    )
    for epoch, layer in enumerate(rs.layers):
        for nid in layer:
            node = rs.nodes[nid]
            w.writerow(
                [nid, epoch]
                + [repr(float(x)) for x in node.belief.weights]
                + [node.obs]
            )


def write_edges_csv(rs: ReachableSet, out: IO[str]) -> None:
    """Edge list: node id, action, child id, probability."""
    w = csv.writer(out)
    w.writerow(["node_id", "action", "child_id", "probability"])
    for (nid, a_idx), kids in sorted(rs.edges.items()):
        for cid, p in kids:
            w.writerow([nid, rs.model.A.labels[a_idx], cid, repr(float(p))])
