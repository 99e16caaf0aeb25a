"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command-line layer
never needs a lookup table of its own.
"""


class ErgolabError(Exception):
    exit_code = 1


class ValidationError(ErgolabError, ValueError):
    """Input does not satisfy a type invariant."""

    exit_code = 2

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class NotHermitian(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotPositive(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


class InvalidMeasurement(ValidationError):
    pass


class NotRankOne(InvalidMeasurement):
    pass


class MissingDims(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class DimensionMismatch(ErgolabError, ValueError):
    exit_code = 3


class EntropyOutOfRange(ErgolabError, ValueError):
    """Target entropy cannot be reached by a non-negative temperature state."""

    exit_code = 4

    def __init__(self, message, s_target=None, attainable=None):
        super().__init__(message)
        self.s_target = s_target
        self.attainable = attainable


class DegenerateSpectrum(EntropyOutOfRange):
    pass


class DimensionCap(ErgolabError, MemoryError):
    exit_code = 5

    def __init__(self, message, requested=None, cap=None):
        super().__init__(message)
        self.requested = requested
        self.cap = cap
