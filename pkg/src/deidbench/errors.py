"""Exception hierarchy shared by every module."""


class DeidError(Exception):
    """Base class for all library errors."""


class ImageIOError(DeidError, OSError):
    pass


class FormatError(DeidError, ValueError):
    pass


class OutOfBounds(DeidError, ValueError):
    pass


class InvalidSize(DeidError, ValueError):
    pass


class DegenerateLandmarks(DeidError, ValueError):
    pass


class SingularTransform(DeidError, ValueError):
    pass


class InvalidKernel(DeidError, ValueError):
    pass


class DimensionMismatch(DeidError, ValueError):
    pass


class KTooLarge(DeidError, ValueError):
    pass


class OracleFailure(DeidError, RuntimeError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class TooSmall(DeidError, ValueError):
    pass


class NumericalError(DeidError, ArithmeticError):
    pass


class EmptyPairs(DeidError, ValueError):
    pass


class MissingColumn(DeidError, KeyError):
    pass


class ZeroInterOcular(DeidError, ZeroDivisionError):
    pass


class WeightError(DeidError, ValueError):
    pass


class NoViableMethod(DeidError, ValueError):
    pass


class UnknownAttribute(DeidError, ValueError):
    pass


class ConfigError(DeidError, ValueError):
    """Invalid experiment configuration. ``path`` is the dotted key at fault."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class MissingFile(ConfigError):
    pass


class MissingDetection(DeidError, LookupError):
    pass


class StageError(DeidError):
    """A member of a sequential ensemble failed."""

    def __init__(self, stage, cause):
        super().__init__(f"ensemble stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
