"""Exception hierarchy shared by all modules."""


class OlsenError(Exception):
    """Base class for every error raised by this package."""


class DomainError(OlsenError, ValueError):
    """Input outside the region where a formula or operation is defined."""


class DegenerateError(OlsenError, ValueError):
    """Input sits on a degenerate set (vanishing denominator, collision of branches)."""


class BranchError(DomainError):
    """A logarithm argument or similar branch condition is violated."""

    def __init__(self, message, factor=None):
        super().__init__(message)
        self.factor = factor


class ClassificationError(OlsenError, ValueError):
    """A point could not be assigned to any branch or case."""


class IntegrationError(OlsenError, RuntimeError):
    """Base class for integrator failures."""


class StiffnessError(IntegrationError):
    """Step size fell below the configured minimum."""


class DivergenceError(IntegrationError):
    """State became NaN or infinite."""


class NoCrossingError(IntegrationError):
    """No section crossing within the integration horizon."""


class EscapeError(IntegrationError):
    """Return-map trajectory failed to reach the next section."""

    def __init__(self, message, leg=None):
        super().__init__(message)
        self.leg = leg


class NoOrbitError(OlsenError, RuntimeError):
    """Fixed-point iteration for a periodic orbit did not converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class InfeasibleError(OlsenError, ValueError):
    """A root exists but violates the side constraints of the construction."""
