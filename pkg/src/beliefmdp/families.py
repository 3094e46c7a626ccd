"""Ready-made parametrized kernel families and model families.

These cover the two regimes the diagnostics distinguish:

* smooth families (tables moving Lipschitz-continuously in the parameter),
  whose continuity moduli vanish along any convergent parameter sequence;
* atom-shifting families (a point mass jumping across a discretized
  observation line), whose moduli stay at 1: the discrete witness of a
  kernel that converges weakly but not uniformly over observation sets.

``family_from_spec`` builds families from a declarative JSON-style dict so
the command line can run the diagnostic suites without Python code.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .diagnostics import KernelFamily, MixtureBase, SequenceSpec
from .measures import Dist, FiniteSpace
from .models import PlatzmanModel, POMDP1Spec, platzman_from_pomdp1

__all__ = [
    "constant_family",
    "linear_table_family",
    "jump_table_family",
    "pointmass_obs_line_family",
    "smooth_pomdp1_family",
    "pointmass_pomdp1_family",
    "family_from_spec",
    "mixture_from_spec",
    "model_family_from_spec",
    "sequence_from_spec",
]


def _space(labels, metric=None) -> FiniteSpace:
    return FiniteSpace(tuple(labels), None if metric is None else np.asarray(metric))


def constant_family(table, s1=None, s2=None, name="constant") -> KernelFamily:
    table = np.asarray(table, dtype=float)
    n1, n2 = table.shape
    s1 = s1 or _space([f"s{i}" for i in range(n1)])
    s2 = s2 or _space([f"t{j}" for j in range(n2)])
    return KernelFamily(s1, s2, (-np.inf, np.inf), lambda theta: table, name=name)


def linear_table_family(
    anchors, tables, s1=None, s2=None, name="linear"
) -> KernelFamily:
    """Componentwise linear interpolation between anchor tables.

    Anchor parameters must be strictly increasing; between anchors the
    table is the convex combination, so it stays a distribution.
    """
    anchors = np.asarray(anchors, dtype=float)
    tables = [np.asarray(t, dtype=float) for t in tables]
    if len(anchors) != len(tables) or len(anchors) < 2:
        raise ValueError("need matching anchors and tables, at least two")
    if np.any(np.diff(anchors) <= 0):
        raise ValueError("anchor parameters must be strictly increasing")
    n1, n2 = tables[0].shape
    s1 = s1 or _space([f"s{i}" for i in range(n1)])
    s2 = s2 or _space([f"t{j}" for j in range(n2)])

    def evaluate(theta: float) -> np.ndarray:
        i = int(np.clip(np.searchsorted(anchors, theta) - 1, 0, len(anchors) - 2))
        lo, hi = anchors[i], anchors[i + 1]
        lam = (theta - lo) / (hi - lo)
        return (1.0 - lam) * tables[i] + lam * tables[i + 1]

    return KernelFamily(s1, s2, (float(anchors[0]), float(anchors[-1])), evaluate, name)


def jump_table_family(
    before, after, jump_at: float, s1=None, s2=None, name="jump"
) -> KernelFamily:
    """Discontinuous family: ``after`` strictly beyond the jump point."""
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    n1, n2 = before.shape
    s1 = s1 or _space([f"s{i}" for i in range(n1)])
    s2 = s2 or _space([f"t{j}" for j in range(n2)])
    return KernelFamily(
        s1,
        s2,
        (-np.inf, np.inf),
        lambda theta: after if theta > jump_at else before,
        name=name,
    )


def _nearest_atom(theta: float, n_atoms: int, lo: float, hi: float) -> int:
    x = (theta - lo) / (hi - lo) * (n_atoms - 1)
    return int(np.clip(np.rint(x), 0, n_atoms - 1))


def pointmass_obs_line_family(
    n_atoms: int = 256, lo: float = 0.0, hi: float = 1.0, name="pointmass-line"
) -> KernelFamily:
    """Single first-coordinate label; a point mass at the observation atom
    nearest to the parameter.  Any parameter move that crosses an atom
    boundary shifts the whole mass, so the moduli equal 1 there."""
    s1 = _space(["s"])
    s2 = _space([f"y{i}" for i in range(n_atoms)])

    def evaluate(theta: float) -> np.ndarray:
        t = np.zeros((1, n_atoms))
        t[0, _nearest_atom(theta, n_atoms, lo, hi)] = 1.0
        return t

    return KernelFamily(s1, s2, (lo, hi), evaluate, name=name)


# --------------------------------------------------------------- model families

_TWO_STATE_METRIC = np.array([[0.0, 1.0], [1.0, 0.0]])


def smooth_pomdp1_family(
    drift: float = 0.1, accuracy: float = 0.8, wobble: float = 0.1
) -> Callable[[float], PlatzmanModel]:
    """Two states, two observations, one action; state rows and the
    observation accuracy move smoothly (Lipschitz) with the parameter."""
    W = FiniteSpace(("w0", "w1"), _TWO_STATE_METRIC)
    Y = FiniteSpace(("y0", "y1"))
    A = FiniteSpace(("a0",))

    def build(theta: float) -> PlatzmanModel:
        s = drift * np.sin(theta)
        q = accuracy + wobble * np.sin(2.0 * theta)
        P1 = np.array([[[0.7 - s, 0.3 + s]], [[0.3 + s, 0.7 - s]]])
        Q1 = np.array([[[q, 1.0 - q]], [[1.0 - q, q]]])
        P0 = np.full((2, 2), 0.5)
        cost = np.zeros((2, 2, 1))
        spec = POMDP1Spec(W, Y, A, P1, Q1, P0, cost, 1.0)
        return platzman_from_pomdp1(spec)

    return build


def pointmass_pomdp1_family(
    n_atoms: int = 256, center: float = 0.5
) -> Callable[[float], PlatzmanModel]:
    """Identity state dynamics observed through atom-valued channels.

    State w0 emits the atom nearest the parameter, state w1 the atom
    nearest its reflection about ``center``.  At the center both states
    emit the same atom and the posterior from a uniform prior stays
    uniform; off the center the atoms separate and posteriors collapse to
    the point masses, so the reduced kernel jumps however small the
    parameter move that crosses an atom boundary.
    """
    W = FiniteSpace(("w0", "w1"), _TWO_STATE_METRIC)
    Y = FiniteSpace(tuple(f"y{i}" for i in range(n_atoms)))
    A = FiniteSpace(("a0",))

    def build(theta: float) -> PlatzmanModel:
        P1 = np.zeros((2, 1, 2))
        P1[0, 0, 0] = 1.0
        P1[1, 0, 1] = 1.0
        Q1 = np.zeros((2, 1, n_atoms))
        Q1[0, 0, _nearest_atom(theta, n_atoms, 0.0, 1.0)] = 1.0
        Q1[1, 0, _nearest_atom(2.0 * center - theta, n_atoms, 0.0, 1.0)] = 1.0
        P0 = np.full((2, n_atoms), 1.0 / n_atoms)
        cost = np.zeros((2, n_atoms, 1))
        spec = POMDP1Spec(W, Y, A, P1, Q1, P0, cost, 1.0)
        return platzman_from_pomdp1(spec)

    return build


# ---------------------------------------------------------- declarative specs


def sequence_from_spec(spec: dict) -> SequenceSpec:
    """{"target": t, "indices": [...], "offsets": [...]?}

    Without offsets the rule is target + 1/n; with offsets, index i maps to
    target + offsets[i].
    """
    target = float(spec["target"])
    indices = tuple(int(n) for n in spec.get("indices", (10, 100, 1000, 10000)))
    offsets = spec.get("offsets")
    if offsets is None:
        return SequenceSpec(target, indices)
    offsets = [float(o) for o in offsets]
    if len(offsets) != len(indices):
        raise ValueError("offsets must match indices")
    table = dict(zip(indices, offsets))
    return SequenceSpec(target, indices, rule=lambda n: target + table[n])


def family_from_spec(spec: dict) -> KernelFamily:
    """Build a kernel family from a declarative description.

    Modes: "constant" (table), "linear" (anchors + tables), "jump"
    (before/after/jump_at), "pointmass-line" (n_atoms, lo, hi).  Optional
    "s1_labels"/"s2_labels"/"s1_metric" override the default spaces.
    """
    mode = spec["mode"]
    s1 = (
        _space(spec["s1_labels"], spec.get("s1_metric"))
        if "s1_labels" in spec
        else None
    )
    s2 = _space(spec["s2_labels"]) if "s2_labels" in spec else None
    name = spec.get("name", mode)
    if mode == "constant":
        return constant_family(spec["table"], s1, s2, name)
    if mode == "linear":
        return linear_table_family(spec["anchors"], spec["tables"], s1, s2, name)
    if mode == "jump":
        return jump_table_family(
            spec["before"], spec["after"], float(spec["jump_at"]), s1, s2, name
        )
    if mode == "pointmass-line":
        return pointmass_obs_line_family(
            int(spec.get("n_atoms", 256)),
            float(spec.get("lo", 0.0)),
            float(spec.get("hi", 1.0)),
            name,
        )
    raise ValueError(f"unknown family mode {mode!r}")


def mixture_from_spec(spec: dict):
    """{"components": [family spec...], "mixing_target": [...],
    "mixing_rule": {"mode": "constant"|"tilt", ...}}

    Components must share spaces; they become the mixing coordinates.
    Returns (MixtureBase, mixing_sequence, mixing_target).
    """
    comps = [family_from_spec(c) for c in spec["components"]]
    first = comps[0]
    for c in comps[1:]:
        if c.s1_space != first.s1_space or c.s2_space != first.s2_space:
            raise ValueError("mixture components must share spaces")
    mixing_space = _space([f"m{i}" for i in range(len(comps))])
    lo = max(c.domain[0] for c in comps)
    hi = min(c.domain[1] for c in comps)
    base = MixtureBase(
        mixing_space,
        first.s1_space,
        first.s2_space,
        (lo, hi),
        lambda i, s4: comps[i].table(s4),
        name=spec.get("name", "mixture"),
    )
    target = Dist(mixing_space, np.asarray(spec["mixing_target"], dtype=float))
    rule = spec.get("mixing_rule", {"mode": "constant"})
    if rule["mode"] == "constant":
        seq = lambda n: target
    elif rule["mode"] == "tilt":
        # Tilt toward the given vertex with weight 1/n; converges in TV.
        vertex = int(rule["vertex"])
        def seq(n, vertex=vertex):
            w = target.weights * (1.0 - 1.0 / n)
            w[vertex] += 1.0 / n
            return Dist(mixing_space, w)
    else:
        raise ValueError(f"unknown mixing rule {rule['mode']!r}")
    return base, seq, target


def model_family_from_spec(spec: dict) -> Callable[[float], PlatzmanModel]:
    mode = spec["mode"]
    if mode == "pomdp1-smooth":
        return smooth_pomdp1_family(
            float(spec.get("drift", 0.1)),
            float(spec.get("accuracy", 0.8)),
            float(spec.get("wobble", 0.1)),
        )
    if mode == "pomdp1-pointmass":
        return pointmass_pomdp1_family(
            int(spec.get("n_atoms", 256)), float(spec.get("center", 0.5))
        )
    raise ValueError(f"unknown model family mode {mode!r}")
