"""Exception hierarchy shared by the numerical modules and the CLI."""


class GKTopError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GKTopError, ValueError):
    """Input outside the domain of a formula (zero denominators, bad radicands)."""


class DegenerateError(DomainError):
    """A structural degeneracy: coincident coordinates, vanishing constants."""


class RealityViolation(GKTopError):
    """A complex-chart value that should be real has a sizeable imaginary part."""


class BranchError(GKTopError):
    """No consistent sign branch of the radical covering at the given point."""


class AdmissibilityError(DomainError):
    """Separated coordinates outside the accessible region.

    ``violated`` names the radicands that are negative.
    """

    def __init__(self, message, violated=()):
        super().__init__(message)
        self.violated = tuple(violated)


class StepUnderflowError(GKTopError):
    """Adaptive step size collapsed below the representable resolution."""


class InputError(GKTopError, ValueError):
    """Malformed or inconsistent user configuration."""
