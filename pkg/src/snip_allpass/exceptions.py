"""Exception and warning types raised across the package."""


class SnipError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SnipError, ValueError):
    """Input data does not satisfy the interpolation problem's preconditions."""


class DuplicateFrequency(ValidationError):
    pass


class NonUnitary(ValidationError):
    pass


class NonHermitianGamma(ValidationError):
    pass


class NonPositiveGamma(ValidationError):
    pass


class FrequencyAtPi(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class MissingGamma(ValidationError):
    """A point has no group-delay matrix; run the group-delay optimizer first."""


class NonHermitianInput(ValidationError):
    pass


class SingularLeadingBlock(SnipError):
    pass


class SingularGamma(SnipError):
    pass


class LostNeutrality(SnipError):
    pass


class NonInvertibleTopBlock(SnipError):
    pass


class PickNotPositiveDefinite(SnipError):
    """The Pick matrix is not positive definite, so no all-pass interpolant exists.

    Attributes
    ----------
    witness : float
        Smallest eigenvalue of the Hermitian part of the Pick matrix.
    """

    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


class DegenerateConstruction(SnipError):
    pass


class SingularDenominator(SnipError):
    pass


class SingularLeadingCoefficient(SnipError):
    pass


class InfeasibleStart(SnipError):
    pass


class UnstableWarning(RuntimeWarning):
    pass


class NoConvergence(RuntimeWarning):
    pass


class BranchAmbiguity(RuntimeWarning):
    pass


class DegenerateSingularValues(RuntimeWarning):
    pass
