"""Exception hierarchy shared by all lodac modules."""


class LodacError(Exception):
    """Base class for all errors raised by lodac."""

    exit_code = 1


class InvalidArgumentError(LodacError, ValueError):
    exit_code = 2


class InvalidRadiusError(InvalidArgumentError):
    pass


class UnsolvablePortfolioError(InvalidArgumentError):
    """Raised when a portfolio lacks radius 1, so some fitness levels may never be left."""


class RepresentationError(InvalidArgumentError):
    pass


class FamilyUndefinedError(InvalidArgumentError):
    pass


class InvalidActionError(InvalidArgumentError):
    pass


class EpisodeFinishedError(LodacError, RuntimeError):
    pass


class UndefinedMetricError(LodacError, ValueError):
    pass


class EnumerationTooLargeError(LodacError):
    exit_code = 3


class TrainingDivergedError(LodacError, FloatingPointError):
    exit_code = 4

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint
