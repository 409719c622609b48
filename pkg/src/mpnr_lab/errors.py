"""Exception hierarchy for mpnr_lab."""


class MpnrError(Exception):
    """Base class for all errors raised by mpnr_lab."""


class NumericalError(MpnrError):
    """A computation could not be carried out to the requested accuracy."""


class TruncationError(NumericalError):
    """The truncated Fock space holds less than ``1 - tail_tol`` of the norm."""


class PadInsufficientError(TruncationError):
    """Squeezing pushed too much weight past the padded cutoff."""


class SeriesNotConvergedError(NumericalError):
    pass


class DegenerateConditionError(NumericalError):
    """The heralding event has (numerically) zero probability."""


class DegenerateInputError(MpnrError, ValueError):
    pass


class InvalidSpecError(MpnrError, ValueError):
    pass


class DimensionMismatchError(MpnrError, ValueError):
    pass


class EnumerationBoundError(MpnrError, ValueError):
    pass


class OracleDomainError(MpnrError, ValueError):
    pass
