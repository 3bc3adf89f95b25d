"""Exception taxonomy shared by every module.

All benchmark errors derive from BenchmarkError so callers can catch the
whole family at the cell boundary while tests assert the precise class.
"""


class BenchmarkError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(BenchmarkError):
    """A bundle directory is missing a required file or is malformed."""


class ValidationError(BenchmarkError):
    """Structured data violates a declared invariant (reported with a field path)."""


class TruncationError(BenchmarkError):
    """The flat signal file is shorter than the manifest's offsets require."""


class IoError(BenchmarkError):
    """Output location is unwritable or a write failed partway."""


class ParamError(BenchmarkError):
    """A parameter is outside its admissible domain for the given data."""


class EmptyError(BenchmarkError):
    """An operation received no data to work on (no events, no scores, ...)."""


class DegenerateError(BenchmarkError):
    """The input carries no usable signal (e.g. zero variance)."""


class TrainingError(BenchmarkError):
    """Model training is impossible with the rows provided."""


class ConfigError(BenchmarkError):
    """The YAML config violates the schema; the message names the YAML path."""


class SkipUser(BenchmarkError):
    """A user cannot be evaluated (too few genuine samples); recorded, not fatal."""


class SessionSkipped(BenchmarkError):
    """Every user of a session was skipped; recorded, not fatal."""
