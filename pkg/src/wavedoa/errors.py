"""Exception hierarchy shared by the library and the CLI.

The CLI maps ConfigurationError (and its subclasses raised while reading
configs or building dictionaries from bad parameters) to exit code 1 and
every other WaveDoaError to exit code 2.
"""


class WaveDoaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(WaveDoaError):
    """Invalid or inconsistent configuration (bad parameter, empty grid, ...)."""


class GeometryError(WaveDoaError):
    """Microphone, source, or array placement violates a geometric constraint."""


class FormatError(WaveDoaError):
    """A dictionary file is corrupt, truncated, or of an unknown version."""


class EmptyInputError(WaveDoaError):
    """Input audio is too short to produce a single frame."""


class MalformedInputError(WaveDoaError):
    """Input audio channels are inconsistent or otherwise unusable."""


class InvalidStimulusError(WaveDoaError):
    """A simulation stimulus is unusable (e.g. silent speech)."""


class NoEstimateError(WaveDoaError):
    """No frame carried enough evidence to produce a direction estimate."""
