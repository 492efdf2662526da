"""Exception hierarchy.

Every error raised by the library derives from :class:`TcdmError`. The
``exit_code`` attribute is what the command-line front end returns when the
error escapes a command.
"""


class TcdmError(Exception):
    exit_code = 2


# -- data errors ------------------------------------------------------------

class DataError(TcdmError, ValueError):
    exit_code = 2


class MissingFileError(DataError):
    pass


class ShapeMismatchError(DataError):
    pass


class NonFiniteError(DataError):
    pass


class NonUniformTimesError(DataError):
    pass


class IoFailureError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class IndexOutOfRangeError(DataError, IndexError):
    pass


class TooLargeError(DataError):
    pass


# -- kernel construction ----------------------------------------------------

class ZeroDensityError(DataError):
    pass


class DisconnectedRowError(DataError):
    pass


# -- solvers ----------------------------------------------------------------

class SolverError(TcdmError):
    exit_code = 3


class NoConvergenceError(SolverError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonPositiveEntryError(SolverError):
    pass


# -- warnings ---------------------------------------------------------------

class RankDeficientWarning(UserWarning):
    """Requested rank exceeds the numerical rank of the operator."""


class UnderResolvedWarning(UserWarning):
    """Sampling error term dominates the bandwidth bias term."""
