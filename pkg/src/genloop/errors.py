"""Exception hierarchy shared by every genloop module."""

from __future__ import annotations


class GenloopError(Exception):
    """Base class for all engine errors."""


class ValidationError(GenloopError):
    """A value violates a domain-type invariant."""


class ArityError(ValidationError):
    """A fixed-arity operation received the wrong number of values."""


class StateError(GenloopError):
    """An operation was invoked at the wrong point of the session lifecycle."""


class BackendError(GenloopError):
    """Transport-level failure talking to an external model service."""

    def __init__(self, message: str, *, backend_id: str | None = None, status: int | None = None):
        super().__init__(message)
        self.backend_id = backend_id
        self.status = status


class FormatError(GenloopError):
    """Model output failed schema validation even after the retry budget."""


class ScoreRangeError(GenloopError):
    """Model returned out-of-range scores even after the re-ask."""


class UnknownElementError(GenloopError):
    """A clarification answer names an ambiguity that does not exist."""


class UnknownSessionError(GenloopError):
    """No persisted session with the given id."""


class SequenceError(GenloopError):
    """Event append would create a gap or duplicate in the per-session sequence."""


class CorruptLogError(GenloopError):
    """A persisted event record does not parse or fails schema checks."""


class StorageError(GenloopError):
    """Artifact store I/O failure."""


class DimensionMismatchError(GenloopError):
    """Mask and image dimensions disagree."""


class RegionExtractionError(GenloopError):
    """Every stage of the region-mask cascade failed."""

    def __init__(self, message: str, *, attempts: tuple[int, ...] = ()):
        super().__init__(message)
        self.attempts = attempts


class PipelineError(GenloopError):
    """Unrecoverable agent error; the partial session is persisted."""

    def __init__(self, message: str, *, session_id: str | None = None):
        super().__init__(message)
        self.session_id = session_id
