"""Exception types shared across modules.

Every numerical failure derives from :class:`NumericalError` so the CLI can map
it to exit status 3; bad inputs raise :class:`ValidationError` (exit status 2).
"""


class ValidationError(ValueError):
    """Inputs violate a documented precondition."""


class NumericalError(RuntimeError):
    """A computation failed for numerical reasons."""


class NonConvergence(NumericalError):
    pass


class DivergentTail(NumericalError):
    pass


class SingularJacobian(NumericalError):
    pass


class DivergentIntegral(NumericalError):
    pass


class CoincidentPoints(ValidationError):
    pass


class OutsideDomain(ValidationError):
    pass


class ModeDomainMismatch(ValidationError):
    pass


class SeparationViolated(ValidationError):
    pass


class BoxConstantsInvalid(NumericalError):
    pass


class RegimeMismatch(ValidationError):
    pass


class InitialSolveFailed(NumericalError):
    pass


class ResolutionLost(NumericalError):
    def __init__(self, message: str, eps: float):
        super().__init__(message)
        self.eps = eps


class PeakUnresolved(NumericalError):
    pass


class SolveFailed(NumericalError):
    pass


class BallOutsideDomain(ValidationError):
    pass


class ZeroDifference(NumericalError):
    """The two solutions coincide to machine precision.

    Raised by the difference identities; it signals the uniqueness outcome
    rather than a defect of the evaluator.
    """
