"""Error hierarchy.

Validation problems derive from :class:`ValidationError` (CLI exit code 1);
file-format and filesystem problems derive from :class:`IoError` (exit code 2).
"""


class LevelCurveError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(LevelCurveError, ValueError):
    pass


class IoError(LevelCurveError, OSError):
    pass


class NonPositiveSigma(ValidationError):
    pass


class NonPositiveEps(ValidationError):
    pass


class RectOutOfBounds(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class EmptyRegion(ValidationError):
    pass


class EmptyTrainingSet(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class ParamOrder(ValidationError):
    pass


class ShapeOutOfBounds(ValidationError):
    pass


class ConstantImage(ValidationError):
    pass


class ModelError(ValidationError):
    """A speed model cannot be evaluated with the supplied inputs."""


class UnsupportedFormat(IoError):
    pass


class CorruptHeader(IoError):
    pass


class TruncatedData(IoError):
    pass
