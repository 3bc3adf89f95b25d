"""Error types raised by the exporter.

Two failure families cover everything: the source material cannot be
located (FetchError), or it was found but cannot be converted faithfully
(ConversionError). Scale guessing is never an option; when amplitude
units are ambiguous the conversion fails instead.
"""


class ExportError(Exception):
    """Base class for exporter failures."""


class FetchError(ExportError):
    """The requested dataset (or part of it) is not available locally."""


class ConversionError(ExportError):
    """Source files exist but cannot be converted without guessing."""
