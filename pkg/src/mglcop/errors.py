"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class MomentUndefinedError(ValueError):
    """A requested moment does not exist for the given parameters."""


class DimensionError(ValueError):
    """Array shapes or dimensions do not agree."""


class NonConvergenceError(RuntimeError):
    """An iterative procedure failed to converge.

    ``trace`` holds whatever diagnostic record the caller collected
    (objective values, parameter iterates, optimizer messages).
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class QuadratureError(NonConvergenceError):
    """Node doubling changed a quadrature result beyond tolerance."""


class NonFiniteError(ArithmeticError):
    """A likelihood term evaluated to a non-finite value."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
