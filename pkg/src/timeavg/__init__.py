"""Certificates for weighted time averages of polynomial maps.

The package computes machine-checkable evidence for the existence or
non-existence of weighted time averages of iterated polynomials: numerical
monodromy of preimage trees, permutation-group analysis of the induced
actions, constructive weight sequences on rotation domains, and degree
growth classification of plane polynomial automorphisms.
"""

__version__ = "0.1.0"

from .exceptions import (
    BudgetError,
    FiberError,
    InvalidInputError,
    LiftError,
    NoNearReturnError,
    NumericalError,
    RootSolveError,
    RoutingError,
    TimeavgError,
)
from .polycore import ComplexPoly, CriticalData, Fiber, critical_data, fiber, roots

__all__ = [
    "BudgetError",
    "ComplexPoly",
    "CriticalData",
    "Fiber",
    "FiberError",
    "InvalidInputError",
    "LiftError",
    "NoNearReturnError",
    "NumericalError",
    "RootSolveError",
    "RoutingError",
    "TimeavgError",
    "critical_data",
    "fiber",
    "roots",
    "__version__",
]
