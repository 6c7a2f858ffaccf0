"""Exception hierarchy shared across the package."""


class EmovoxError(Exception):
    """Base class for all errors raised by emovox."""


class FormatError(EmovoxError, ValueError):
    """A file does not follow the expected layout (header, column count, value syntax)."""


class ValidationError(EmovoxError, ValueError):
    """Content is well-formed but violates a semantic rule (duplicate id, unknown label)."""


class UnsupportedFormatError(EmovoxError, ValueError):
    """Audio encoding that the loader does not handle."""


class TooShortError(EmovoxError, ValueError):
    pass


class DegenerateSpectrumError(EmovoxError, ValueError):
    pass


class NoVoicedFramesError(EmovoxError, ValueError):
    pass


class TooFewSamplesError(EmovoxError, ValueError):
    pass


class DimensionMismatchError(EmovoxError, ValueError):
    pass


class MissingClassError(EmovoxError, ValueError):
    pass


class EmptyInputError(EmovoxError, ValueError):
    pass


class LengthMismatchError(EmovoxError, ValueError):
    pass


class TooFewSpeakersError(EmovoxError, ValueError):
    pass


class NotConvergedError(EmovoxError, RuntimeError):
    """The SMO solver hit its iteration cap before meeting the KKT tolerance.

    ``diagnostics`` holds the iteration count and the final optimality gap so
    the caller can decide whether to retry with a looser tolerance.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
