"""Exception hierarchy shared by every stage of the pipeline."""


class LTCEmotionError(Exception):
    """Base class for all package errors."""


class DataError(LTCEmotionError, ValueError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class InvalidBandError(DataError):
    pass


class InvalidFrequencyError(DataError):
    pass


class SignalTooShortError(DataError):
    pass


class NormalizationError(DataError):
    def __init__(self, message, channel=None):
        super().__init__(message)
        self.channel = channel


class RankError(DataError):
    pass


class InsufficientBeatsError(DataError):
    pass


class StratificationError(DataError):
    pass


class ShapeError(LTCEmotionError, ValueError):
    pass


class ConfigError(LTCEmotionError, ValueError):
    pass


class UndefinedMetricError(LTCEmotionError, ValueError):
    pass


class NumericError(LTCEmotionError, ArithmeticError):
    """Numeric failure (CLI exit code 3)."""


class ConvergenceError(NumericError):
    def __init__(self, message, iterations):
        super().__init__(message)
        self.iterations = iterations


class StageError(LTCEmotionError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
