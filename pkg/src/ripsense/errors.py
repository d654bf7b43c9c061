"""Exception hierarchy shared by every module."""


class RipSenseError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RipSenseError, ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ParameterError(RipSenseError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class NumericalError(RipSenseError, ArithmeticError):
    """A numerical procedure failed or produced an untrustworthy result."""


class SingularMatrixError(NumericalError):
    """A matrix that must be invertible is singular at the working tolerance."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class RankMismatchError(NumericalError):
    """The dictionary and the random matrix do not have equal numerical rank."""

    def __init__(self, rank_d, rank_a):
        super().__init__(f"rank mismatch: rank(D) = {rank_d}, rank(A) = {rank_a}")
        self.rank_d = rank_d
        self.rank_a = rank_a


class NotTightFrameError(NumericalError):
    """DD^T is not a multiple of an orthogonal projector."""

    def __init__(self, deviation):
        super().__init__(f"dictionary is not a tight frame: max deviation {deviation:.3e}")
        self.deviation = deviation


class FormatError(RipSenseError):
    """A matrix file is malformed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
