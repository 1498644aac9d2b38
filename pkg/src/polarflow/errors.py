"""Exception hierarchy.

Numerical failures derive from :class:`NumericalError` so that callers (and
the CLI) can tell them apart from bad input shapes.
"""


class PolarFlowError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PolarFlowError, ValueError):
    pass


class DimensionTooLarge(PolarFlowError, ValueError):
    pass


class NotFinite(PolarFlowError, ValueError):
    pass


class IoError(PolarFlowError, OSError):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class NumericalError(PolarFlowError):
    """A numerical precondition or convergence failure."""


class NotSymmetric(NumericalError):
    pass


class NotSpd(NumericalError):
    pass


class Singular(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class IllConditioned(NumericalError):
    pass


class NegativeDeterminant(NumericalError):
    pass


class OffFiber(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotConverged(NumericalError):
    """Flow did not reach the stopping tolerance.

    The best available factors are attached as ``factors`` for diagnosis.
    """

    def __init__(self, message, factors=None, omega_norm=None):
        super().__init__(message)
        self.factors = factors
        self.omega_norm = omega_norm


class ExhaustedDraws(NumericalError):
    pass
