"""Exception hierarchy.

Every error raised by the package derives from :class:`ChannelError`, so
callers (the CLI in particular) can map whole families to exit codes.
"""


class ChannelError(ValueError):
    pass


class NotHermitian(ChannelError):
    pass


class NonSquare(ChannelError):
    pass


class DimensionMismatch(ChannelError):
    pass


class BadDimension(ChannelError):
    pass


class IncompleteKraus(ChannelError):
    pass


class MalformedTransfer(ChannelError):
    pass


class SingularIntermediate(ChannelError):
    """Raised when a map is too close to non-invertible to divide by."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NumericalFailure(ChannelError):
    pass


class StepTooCoarse(NumericalFailure):
    pass


class NotConverged(NumericalFailure):
    pass


class ParameterError(ChannelError):
    pass


class CurveOutOfRange(ParameterError):
    pass


class BadSimplex(ParameterError):
    pass


class BadParams(ParameterError):
    pass


class BadRate(ParameterError):
    pass


class DampingSaturated(ParameterError):
    pass


class SpecError(ChannelError):
    """Malformed channel-specification document."""
