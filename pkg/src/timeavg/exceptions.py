"""Exception hierarchy shared by all modules."""


class TimeavgError(Exception):
    """Base class for all package errors."""


class InvalidInputError(TimeavgError):
    """Malformed or out-of-contract input."""


class BudgetError(TimeavgError):
    """A configured cap (degree, monomials, iterations) was exceeded."""


class NumericalError(TimeavgError):
    """A numerical routine failed in a way that must not be papered over."""


class RootSolveError(NumericalError):
    """Simultaneous root iteration did not converge to the residual target."""


class FiberError(NumericalError):
    """A preimage fiber could not be computed to contract quality."""


class LiftError(NumericalError):
    """Analytic continuation of an inverse branch lost its track.

    Raised instead of guessing: permutations feed certificates, so a lift
    either finishes cleanly or fails loudly.
    """


class RoutingError(NumericalError):
    """Loop stems could not be routed clear of the critical values."""


class NoNearReturnError(NumericalError):
    """No near-return met the target within the scan horizon."""

    def __init__(self, message, best_norm=None):
        super().__init__(message)
        self.best_norm = best_norm
