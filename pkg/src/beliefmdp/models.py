"""Model classes for partially observable control and their relations.

The hierarchy, from general to special:

* :class:`MDPIIModel` -- states (w, y) with unobservable w and observable y;
  transitions P(w', y' | w, y, a).
* :class:`PlatzmanModel` -- the transition kernel does not depend on y:
  P(w', y' | w, a).
* :class:`POMDP1Spec` / :class:`POMDP2Spec` -- Platzman models whose kernel
  factors through a state kernel and an observation kernel; the observation
  is generated from (w, a) for the first kind and from (a, w') for the
  second.
* :class:`MDPModel` -- fully observable; a degenerate case with a singleton
  unobservable component.

Kernel tables are plain float arrays indexed as documented per class.
Constructors check shapes only; numeric invariants (row normalization,
cost signs) are reported by :func:`validate` as data, so that malformed
inputs can be diagnosed rather than rejected at parse time.  Costs are
finite nonnegative reals; models without initial observation structure use
a single dummy observation so that the initial kernel is always present.

All classes are frozen and their arrays are read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .measures import FiniteSpace

__all__ = [
    "MDPIIModel",
    "PlatzmanModel",
    "POMDP1Spec",
    "POMDP2Spec",
    "MDPModel",
    "Violation",
    "validate",
    "ModelValidationError",
    "check_valid",
    "platzman_from_pomdp1",
    "platzman_from_pomdp2",
    "mdpii_from_platzman",
    "mdpii_from_mdp",
]

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    """One violated model invariant, with the offending coordinates."""

    kind: str
    where: tuple
    message: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.message}"


class ModelValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        lines = "\n".join(f"  - {v}" for v in violations)
        super().__init__(f"model fails validation:\n{lines}")


def _freeze(model, **arrays):
    for name, value in arrays.items():
        a = np.array(value, dtype=float)
        a.flags.writeable = False
        object.__setattr__(model, name, a)


def _check_shape(name: str, arr: np.ndarray, shape: tuple[int, ...]) -> None:
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")


@dataclass(frozen=True, eq=False)
class MDPIIModel:
    """Model with transitions P[w, y, a, w', y'], initial kernel P0[w, y0],
    cost[w, y, a] and a nonnegative discount factor."""

    W: FiniteSpace
    Y: FiniteSpace
    A: FiniteSpace
    P: np.ndarray
    P0: np.ndarray
    cost: np.ndarray
    discount: float

    def __post_init__(self):
        _freeze(self, P=self.P, P0=self.P0, cost=self.cost)
        nw, ny, na = len(self.W), len(self.Y), len(self.A)
        _check_shape("P", self.P, (nw, ny, na, nw, ny))
        _check_shape("P0", self.P0, (nw, ny))
        _check_shape("cost", self.cost, (nw, ny, na))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.W), len(self.Y), len(self.A)


@dataclass(frozen=True, eq=False)
class PlatzmanModel:
    """MDPII whose kernel ignores the observable component: P[w, a, w', y']."""

    W: FiniteSpace
    Y: FiniteSpace
    A: FiniteSpace
    P: np.ndarray
    P0: np.ndarray
    cost: np.ndarray
    discount: float

    def __post_init__(self):
        _freeze(self, P=self.P, P0=self.P0, cost=self.cost)
        nw, ny, na = len(self.W), len(self.Y), len(self.A)
        _check_shape("P", self.P, (nw, na, nw, ny))
        _check_shape("P0", self.P0, (nw, ny))
        _check_shape("cost", self.cost, (nw, ny, na))

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.W), len(self.Y), len(self.A)

    def cost_is_observation_free(self, tol: float = 0.0) -> bool:
        spread = np.ptp(self.cost, axis=1)
        return bool(np.all(spread <= tol))


@dataclass(frozen=True, eq=False)
class POMDP1Spec:
    """Observation generated from the pre-transition state: P1[w, a, w'],
    Q1[w, a, y']."""

    W: FiniteSpace
    Y: FiniteSpace
    A: FiniteSpace
    P1: np.ndarray
    Q1: np.ndarray
    P0: np.ndarray
    cost: np.ndarray
    discount: float

    def __post_init__(self):
        _freeze(self, P1=self.P1, Q1=self.Q1, P0=self.P0, cost=self.cost)
        nw, ny, na = len(self.W), len(self.Y), len(self.A)
        _check_shape("P1", self.P1, (nw, na, nw))
        _check_shape("Q1", self.Q1, (nw, na, ny))
        _check_shape("P0", self.P0, (nw, ny))
        _check_shape("cost", self.cost, (nw, ny, na))


@dataclass(frozen=True, eq=False)
class POMDP2Spec:
    """Observation generated from the post-transition state: P2[w, a, w'],
    Q2[a, w', y']."""

    W: FiniteSpace
    Y: FiniteSpace
    A: FiniteSpace
    P2: np.ndarray
    Q2: np.ndarray
    P0: np.ndarray
    cost: np.ndarray
    discount: float

    def __post_init__(self):
        _freeze(self, P2=self.P2, Q2=self.Q2, P0=self.P0, cost=self.cost)
        nw, ny, na = len(self.W), len(self.Y), len(self.A)
        _check_shape("P2", self.P2, (nw, na, nw))
        _check_shape("Q2", self.Q2, (na, nw, ny))
        _check_shape("P0", self.P0, (nw, ny))
        _check_shape("cost", self.cost, (nw, ny, na))


@dataclass(frozen=True, eq=False)
class MDPModel:
    """Fully observable model: kernel[x, a, x'], cost[x, a]."""

    X: FiniteSpace
    A: FiniteSpace
    kernel: np.ndarray
    cost: np.ndarray
    discount: float

    def __post_init__(self):
        _freeze(self, kernel=self.kernel, cost=self.cost)
        nx, na = len(self.X), len(self.A)
        _check_shape("kernel", self.kernel, (nx, na, nx))
        _check_shape("cost", self.cost, (nx, na))


def _kernel_violations(
    name: str,
    table: np.ndarray,
    row_axes: int,
    labels: tuple[tuple[str, ...], ...],
) -> Iterable[Violation]:
    """Check that every slice over the leading ``row_axes`` axes is a
    probability vector."""
    lead = table.shape[:row_axes]
    flat = table.reshape(lead + (-1,)) if table.ndim > row_axes else table
    for idx in np.ndindex(*lead):
        row = flat[idx]
        where = tuple(labels[k][i] for k, i in enumerate(idx))
        if np.any(row < -1e-12):
            yield Violation(
                "negative-probability", (name, *where), f"min entry {row.min():g}"
            )
        total = row.sum()
        if abs(total - 1.0) > ROW_SUM_TOL:
            yield Violation(
                "normalization", (name, *where), f"row sums to {total!r}"
            )


def _cost_violations(cost: np.ndarray, labels) -> Iterable[Violation]:
    for idx in np.ndindex(*cost.shape):
        v = cost[idx]
        where = tuple(labels[k][i] for k, i in enumerate(idx))
        if not np.isfinite(v):
            yield Violation("cost-not-finite", ("cost", *where), f"value {v!r}")
        elif v < 0:
            yield Violation("cost-negative", ("cost", *where), f"value {v!r}")


def validate(model) -> list[Violation]:
    """Collect every violated invariant of a model; empty means valid."""
    out: list[Violation] = []
    if isinstance(model, MDPIIModel):
        w, y, a = model.W.labels, model.Y.labels, model.A.labels
        out += _kernel_violations("P", model.P, 3, (w, y, a))
        out += _kernel_violations("P0", model.P0, 1, (w,))
        out += _cost_violations(model.cost, (w, y, a))
    elif isinstance(model, PlatzmanModel):
        w, y, a = model.W.labels, model.Y.labels, model.A.labels
        out += _kernel_violations("P", model.P, 2, (w, a))
        out += _kernel_violations("P0", model.P0, 1, (w,))
        out += _cost_violations(model.cost, (w, y, a))
    elif isinstance(model, POMDP1Spec):
        w, y, a = model.W.labels, model.Y.labels, model.A.labels
        out += _kernel_violations("P1", model.P1, 2, (w, a))
        out += _kernel_violations("Q1", model.Q1, 2, (w, a))
        out += _kernel_violations("P0", model.P0, 1, (w,))
        out += _cost_violations(model.cost, (w, y, a))
    elif isinstance(model, POMDP2Spec):
        w, y, a = model.W.labels, model.Y.labels, model.A.labels
        out += _kernel_violations("P2", model.P2, 2, (w, a))
        out += _kernel_violations("Q2", model.Q2, 2, (a, w))
        out += _kernel_violations("P0", model.P0, 1, (w,))
        out += _cost_violations(model.cost, (w, y, a))
    elif isinstance(model, MDPModel):
        x, a = model.X.labels, model.A.labels
        out += _kernel_violations("kernel", model.kernel, 2, (x, a))
        out += _cost_violations(model.cost, (x, a))
    else:
        raise TypeError(f"not a model: {type(model).__name__}")
    if model.discount < 0:
        out.append(
            Violation("discount-negative", ("discount",), f"value {model.discount!r}")
        )
    return out


def check_valid(model) -> None:
    """Raise :class:`ModelValidationError` when validation reports anything."""
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations)


def platzman_from_pomdp1(spec: POMDP1Spec) -> PlatzmanModel:
    """Collapse a POMDP of the first kind: P(w', y' | w, a) = P1 * Q1."""
    check_valid(spec)
    P = np.einsum("wak,way->waky", spec.P1, spec.Q1)
    return PlatzmanModel(spec.W, spec.Y, spec.A, P, spec.P0, spec.cost, spec.discount)


def platzman_from_pomdp2(spec: POMDP2Spec) -> PlatzmanModel:
    """Collapse a POMDP of the second kind: P(w', y' | w, a) = P2 * Q2(.|a, w')."""
    check_valid(spec)
    P = np.einsum("wak,aky->waky", spec.P2, spec.Q2)
    return PlatzmanModel(spec.W, spec.Y, spec.A, P, spec.P0, spec.cost, spec.discount)


def mdpii_from_platzman(model: PlatzmanModel) -> MDPIIModel:
    """Embed by copying the kernel across the observable coordinate."""
    nw, ny, na = model.sizes
    P = np.broadcast_to(
        model.P[:, None, :, :, :], (nw, ny, na, nw, ny)
    ).copy()
    return MDPIIModel(model.W, model.Y, model.A, P, model.P0, model.cost, model.discount)


def mdpii_from_mdp(model: MDPModel, initial: np.ndarray) -> MDPIIModel:
    """Embed a fully observable model: the unobservable component is a
    singleton and the observation is the state itself.

    ``initial`` is the distribution of the initial state; it becomes the
    initial observation kernel row.
    """
    nx, na = len(model.X), len(model.A)
    W = FiniteSpace(("*",))
    P = np.zeros((1, nx, na, 1, nx))
    P[0, :, :, 0, :] = model.kernel
    P0 = np.asarray(initial, dtype=float).reshape(1, nx)
    cost = model.cost[None, :, :]
    return MDPIIModel(W, model.X, model.A, P, P0, cost, model.discount)
