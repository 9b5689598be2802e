"""Exception types raised by the solver."""

import numpy as np


class InvalidInputError(ValueError):
    """Non-finite or otherwise malformed numerical input."""


class SingularFactorError(np.linalg.LinAlgError):
    """A triangular square-root factor has a (numerically) zero diagonal entry."""


class LinearizationError(RuntimeError):
    """The vector field or its Jacobian produced non-finite values.

    Attributes:
        t: time point of the failing evaluation.
        iteration: IEKS iteration during which it happened, if known.
        index: grid index, if known.
    """

    def __init__(self, message, t=None, iteration=None, index=None):
        super().__init__(message)
        self.t = t
        self.iteration = iteration
        self.index = index


class ScanError(RuntimeError):
    """An operator invocation failed inside an associative scan.

    ``index_range`` is the inclusive range ``(lo, hi)`` of original element
    indices that the failed combination would have covered.
    """

    def __init__(self, message, index_range):
        super().__init__(message)
        self.index_range = index_range


class ReferenceNotConvergedError(RuntimeError):
    """The RK4 reference failed its step-halving self check."""
