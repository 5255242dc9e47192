"""Exception hierarchy shared across the toolkit.

Every failure mode callers are expected to branch on gets its own class;
generic misuse raises InvalidArgumentError (a ValueError subclass so that
idiomatic ``except ValueError`` still works).
"""


class PhasekitError(Exception):
    """Base class for all phasekit errors."""


class InvalidArgumentError(PhasekitError, ValueError):
    """An argument violates a documented precondition."""


class WavFormatError(PhasekitError):
    """File is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(WavFormatError):
    """WAV container is valid but the sample encoding is not supported."""


class ClippingError(PhasekitError):
    """Samples exceed the representable range of the requested output format."""


class NoContentError(PhasekitError):
    """No excerpt exceeding the silence threshold could be drawn."""


class DegeneratePairError(PhasekitError):
    """Both signals of a pair are all-zero; no common gain exists."""


class DegenerateDataError(PhasekitError):
    """Too few or constant observations for the requested statistic."""


class NoDataError(PhasekitError):
    """The response set has no rows matching the query."""


class ConfigurationError(PhasekitError):
    """Service or pipeline configuration is unusable."""


class UnknownSessionError(PhasekitError):
    """No session with the given id exists."""


class SequencingError(PhasekitError):
    """Response arrived for a question other than the current one."""


class ConflictError(PhasekitError):
    """A response for this (session, question) is already recorded."""


class LogCorruptionError(PhasekitError):
    """An event-log line could not be decoded."""

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset
