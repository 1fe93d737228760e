"""Exception types shared across the package."""


class NirenbergError(Exception):
    """Base class for all errors raised by this package."""


class SingularPoint(NirenbergError, ValueError):
    pass


class UnsupportedDimension(NirenbergError, ValueError):
    pass


class DivergentIntegral(NirenbergError, ValueError):
    pass


class OutsideBalls(NirenbergError, ValueError):
    pass


class SchemaError(NirenbergError, ValueError):
    """The landscape JSON does not follow the expected layout."""


class DuplicatePoint(NirenbergError, ValueError):
    pass


class UnknownName(NirenbergError, KeyError):
    pass


class NotInBj0(NirenbergError, ValueError):
    pass


class BetaTooSmall(NirenbergError, ValueError):
    pass


class CapExceeded(NirenbergError, ValueError):
    pass


class IndeterminateEigenvalue(NirenbergError):
    """Some subset has a least eigenvalue inside the zero band.

    ``decided`` holds the classes whose membership was settled and
    ``undecided`` the subsets that could not be classified.
    """

    def __init__(self, message, decided=(), undecided=()):
        super().__init__(message)
        self.decided = list(decided)
        self.undecided = list(undecided)


class PreconditionFailed(NirenbergError, ValueError):
    pass


class QuadratureNotConverged(NirenbergError, RuntimeError):
    pass


class UnassignedOwner(NirenbergError, ValueError):
    pass


class NonFiniteVelocity(NirenbergError, FloatingPointError):
    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class IndeterminateHypothesis(NirenbergError):
    pass
