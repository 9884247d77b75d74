"""Exception hierarchy shared by the library and the command line tool."""


class GapflowError(Exception):
    """Base class for all errors raised by gapflow."""


class DomainError(GapflowError, ValueError):
    """An argument lies outside the domain of the operation."""


class DataError(GapflowError, ValueError):
    """Input data is malformed or violates an ordering constraint."""


class NumericError(GapflowError, ArithmeticError):
    """A numerical procedure failed to reach the requested accuracy."""


class FitError(NumericError):
    """No optimizer restart converged.

    The best point found so far is kept on ``best`` (a FitReport) so callers
    can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
