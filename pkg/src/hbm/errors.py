"""Exception hierarchy shared across the engine.

Every error raised by the library derives from HbmError so callers (and the
CLI exit-code mapping) can distinguish engine failures from programming bugs.
"""


class HbmError(Exception):
    """Base class for all engine errors."""


class ShapeError(HbmError):
    """Operands have incompatible or invalid dimensions."""


class NonFiniteError(HbmError):
    """A tensor operation produced NaN or Inf."""


class ConfigError(HbmError):
    """Invalid configuration value or combination."""


class DataError(HbmError):
    """Input data inconsistent with the requested operation."""


class FormatError(HbmError):
    """A file does not follow the expected container format."""


class CorruptionError(FormatError):
    """A file follows the format header but its payload is damaged."""


class TrainingError(HbmError):
    """Training aborted (e.g. non-finite gradients)."""


class MetricError(HbmError):
    """A metric is undefined for the given inputs."""


class IntegrityError(HbmError):
    """A forward trace does not match the parameters it is replayed against."""


class ExportError(HbmError):
    """Annotation bundle export failed."""
