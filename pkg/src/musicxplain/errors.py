"""Exception hierarchy shared across the package."""


class ExplainerError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ExplainerError):
    """An input violates a documented precondition or invariant."""


class FormatError(ExplainerError):
    """A file is not in a supported format."""


class NumericalError(ExplainerError):
    """A numerical routine could not produce a reliable result."""


class PredictorError(ExplainerError):
    """A model backend failed to produce predictions.

    Carries the failing request id and/or perturbation sample index when
    they are known, so callers can report exactly which query failed.
    """

    def __init__(self, message, *, request_id=None, sample_index=None):
        super().__init__(message)
        self.request_id = request_id
        self.sample_index = sample_index


class ProtocolError(PredictorError):
    """An external process violated the line protocol."""


class HandshakeTimeout(ProtocolError):
    """The external process did not complete its handshake in time."""


class MalformedResponse(ProtocolError):
    """A response line was not valid JSON or lacked required fields."""


class ResponseLengthMismatch(ProtocolError):
    """A probability vector had the wrong number of entries."""


class ResponseNotNormalized(ProtocolError):
    """A probability vector was negative or did not sum to 1."""
