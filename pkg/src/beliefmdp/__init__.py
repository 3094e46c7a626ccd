"""Finite-space partially observable Markov decision models.

Exact belief-state reduction of models with unobservable state components,
discounted dynamic programming on the reduced model, seeded simulation,
and numerical continuity diagnostics for parametrized transition kernels.
"""

from .measures import Dist, FiniteSpace, kr_distance, mix, signed_extremes, tv_distance
from .models import (
    MDPIIModel,
    MDPModel,
    PlatzmanModel,
    POMDP1Spec,
    POMDP2Spec,
    mdpii_from_platzman,
    platzman_from_pomdp1,
    platzman_from_pomdp2,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Dist",
    "FiniteSpace",
    "tv_distance",
    "kr_distance",
    "signed_extremes",
    "mix",
    "MDPIIModel",
    "PlatzmanModel",
    "POMDP1Spec",
    "POMDP2Spec",
    "MDPModel",
    "validate",
    "platzman_from_pomdp1",
    "platzman_from_pomdp2",
    "mdpii_from_platzman",
    "__version__",
]
