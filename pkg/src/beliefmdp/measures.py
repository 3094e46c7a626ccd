"""Finite probability spaces and the two distances used throughout.

Everything here is immutable after construction and every operation is
pure, so values can be shared freely across threads.

Distances:

* total variation -- sup over label subsets of the measure difference,
  computed exactly as half the L1 distance of the weight vectors;
* Kantorovich-Rubinshtein -- sup of integral differences over functions
  that are 1-Lipschitz for the space metric and bounded by 1 in absolute
  value.  On a finite space this sup is a finite linear program; it is
  evaluated exactly through the equivalent optimal-transport program with
  the metric truncated at 2 (the bound on the test functions), solved by
  the bundled dense simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .lp import transport_cost

__all__ = [
    "FiniteSpace",
    "Dist",
    "SpaceMismatchError",
    "tv_distance",
    "kr_distance",
    "signed_extremes",
    "mix",
]

#: Largest label count accepted by kr_distance; keeps the LP dense-friendly.
KR_SUPPORT_CAP = 64

#: Test functions in the KR sup are bounded by 1, so no transport leg can
#: cost more than 2; the metric is truncated there.
KR_BOX_BOUND = 2.0


class SpaceMismatchError(ValueError):
    """Two distributions do not live on the same finite space."""


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered finite label set, optionally carrying a metric.

    The metric, when present, must be a symmetric nonnegative matrix with a
    zero diagonal satisfying the triangle inequality (checked to 1e-12).
    """

    labels: tuple[str, ...]
    metric: np.ndarray | None = None
    metric_tol: float = field(default=1e-12, compare=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("label set must be nonempty")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        if self.metric is not None:
            m = np.array(self.metric, dtype=float)
            n = len(labels)
            if m.shape != (n, n):
                raise ValueError(f"metric must be {n}x{n}, got {m.shape}")
            if np.any(m < 0):
                raise ValueError("metric entries must be nonnegative")
            if np.any(np.abs(np.diag(m)) > self.metric_tol):
                raise ValueError("metric diagonal must be zero")
            if np.any(np.abs(m - m.T) > self.metric_tol):
                raise ValueError("metric must be symmetric")
            # d(i,k) <= d(i,j) + d(j,k) for all triples.
            lhs = m[:, None, :]
            rhs = m[:, :, None] + m[None, :, :]
            if np.any(lhs > rhs + self.metric_tol):
                raise ValueError("metric violates the triangle inequality")
            m.flags.writeable = False
            object.__setattr__(self, "metric", m)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FiniteSpace):
            return NotImplemented
        if self.labels != other.labels:
            return False
        if (self.metric is None) != (other.metric is None):
            return False
        return self.metric is None or np.array_equal(self.metric, other.metric)

    def __hash__(self) -> int:
        return hash(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"label {label!r} not in space") from None

    def distance(self, a: str, b: str) -> float:
        if self.metric is None:
            raise ValueError("space carries no metric")
        return float(self.metric[self.index(a), self.index(b)])


def product_space(s1: FiniteSpace, s2: FiniteSpace) -> FiniteSpace:
    """Product label space with labels '(a|b)'; no metric is attached."""
    labels = tuple(f"({a}|{b})" for a in s1.labels for b in s2.labels)
    return FiniteSpace(labels)


@dataclass(frozen=True)
class Dist:
    """A probability vector over a :class:`FiniteSpace`.

    Weights must be nonnegative and sum to 1 within ``sum_tol``; the
    constructor renormalizes float drift inside that tolerance and rejects
    anything larger as a modeling error.
    """

    space: FiniteSpace
    weights: np.ndarray
    sum_tol: float = field(default=1e-9, compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(self.space),):
            raise ValueError(
                f"expected {len(self.space)} weights, got shape {w.shape}"
            )
        if np.any(w < -1e-12):
            raise ValueError(f"negative weight {w.min():g}")
        w = np.maximum(w, 0.0)
        total = float(w.sum())
        if abs(total - 1.0) > self.sum_tol:
            raise ValueError(f"weights sum to {total!r}, not 1")
        if total != 1.0:
            w = w / total
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self.space == other.space and np.array_equal(
            self.weights, other.weights
        )

    def __hash__(self) -> int:
        return hash((self.space.labels, self.weights.tobytes()))

    def __getitem__(self, label: str) -> float:
        return float(self.weights[self.space.index(label)])

    @staticmethod
    def point_mass(space: FiniteSpace, label: str) -> "Dist":
        w = np.zeros(len(space))
        w[space.index(label)] = 1.0
        return Dist(space, w)

    @staticmethod
    def uniform(space: FiniteSpace) -> "Dist":
        n = len(space)
        return Dist(space, np.full(n, 1.0 / n))

    def support(self) -> list[str]:
        return [l for l, w in zip(self.space.labels, self.weights) if w > 0.0]


def _require_same_space(mu: Dist, nu: Dist) -> None:
    if mu.space != nu.space:
        raise SpaceMismatchError("distributions live on different spaces")


def tv_distance(mu: Dist, nu: Dist) -> float:
    """Total variation distance: sup_C |mu(C) - nu(C)| = 0.5 * L1."""
    _require_same_space(mu, nu)
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def kr_distance(mu: Dist, nu: Dist) -> float:
    """Kantorovich-Rubinshtein distance on a metric finite space.

    Equals sup { integral of f d(mu - nu) } over f with |f(a) - f(b)| <=
    d(a, b) and |f| <= 1.  The box bound makes every such f 1-Lipschitz for
    the truncated metric min(d, 2) and conversely (after centering), so the
    sup coincides with the optimal-transport cost under the truncated
    metric, which is what the bundled simplex solves.  Values lie in [0, 2].
    """
    _require_same_space(mu, nu)
    if mu.space.metric is None:
        raise ValueError("kr_distance requires a space with a metric")
    n = len(mu.space)
    if n > KR_SUPPORT_CAP:
        raise ValueError(
            f"kr_distance supports at most {KR_SUPPORT_CAP} labels, got {n}"
        )
    cost = np.minimum(mu.space.metric, KR_BOX_BOUND)
    value, _ = transport_cost(mu.weights, nu.weights, cost)
    # The program is always feasible (the product coupling); tiny negative
    # dust from pivoting is clipped.
    return min(max(value, 0.0), KR_BOX_BOUND)


def signed_extremes(diff: Sequence[float] | np.ndarray) -> tuple[float, float]:
    """Positive and negative parts of a signed vector's subset sums.

    Returns (pos_sum, neg_sum) with pos_sum = sum of positive entries and
    neg_sum = sum of negative entries, so that over all index subsets B the
    sum ranges across [neg_sum, pos_sum] and sup_B |sum over B| equals
    max(pos_sum, -neg_sum).  Sums are correctly rounded (fsum), so they
    agree exactly with any other correctly-rounded subset enumeration.
    """
    d = np.asarray(diff, dtype=float)
    pos = math.fsum(d[d > 0])
    neg = math.fsum(d[d < 0])
    return pos, neg


def mix(dists: Sequence[Dist], weights) -> Dist:
    """Convex combination of distributions on a shared space."""
    if not dists:
        raise ValueError("need at least one distribution")
    if isinstance(weights, Dist):
        w = weights.weights
    else:
        w = np.asarray(weights, dtype=float)
    if w.shape != (len(dists),):
        raise ValueError(f"{len(dists)} distributions but {w.shape} weights")
    if np.any(w < -1e-12):
        raise ValueError("mixture weights must be nonnegative")
    space = dists[0].space
    for d in dists[1:]:
        if d.space != space:
            raise SpaceMismatchError("mixture components on different spaces")
    stacked = np.stack([d.weights for d in dists])
    return Dist(space, w @ stacked)
