"""Exception taxonomy shared across the pipeline.

Every error a stage can surface to a caller lives here so that the service
layer can name the failing stage without importing half the package.
"""

from __future__ import annotations


class VidsleuthError(Exception):
    """Base class for every error raised by this package."""


# --- platform / transport ---------------------------------------------------


class TransportError(VidsleuthError):
    """Network-level failure talking to an external backend."""


class NotFound(VidsleuthError):
    """The requested remote object does not exist."""


class AuthError(VidsleuthError):
    """Missing or rejected credentials."""


class QuotaExceeded(TransportError):
    """The backend reported a quota / rate-limit rejection."""


class MissingRecording(VidsleuthError):
    """Replay mode was asked for a request that was never recorded."""


# --- ingest ------------------------------------------------------------------


class NoCaptions(VidsleuthError):
    """The video has no caption track; the pipeline must not fabricate one."""


class CommentsDisabled(VidsleuthError):
    """Comments are turned off for the video."""


class MalformedTrack(VidsleuthError):
    """A caption document could not be parsed."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", offset {offset}" if offset is not None else "") + ")"
        super().__init__(message + where)


class EmptyTranscript(VidsleuthError):
    """Claim extraction was handed a transcript with no text."""


# --- model client ------------------------------------------------------------


class LlmError(VidsleuthError):
    """Model call failed after the retry budget was exhausted."""


class PromptTooLarge(LlmError):
    """Prompt exceeds the configured context budget; refuse instead of truncating."""


class SchemaViolation(VidsleuthError):
    """Structured model output failed validation.

    ``path`` names the first failing location, e.g. ``claims[0].questions[1]``.
    """

    def __init__(self, message: str, *, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


# --- retrieval ---------------------------------------------------------------


class AllRetrieversFailed(VidsleuthError):
    """Every configured evidence source errored for one question."""


# --- bender ------------------------------------------------------------------


class MissingFrontMatter(VidsleuthError):
    """A corpus article file lacks required front-matter."""

    def __init__(self, message: str, *, filename: str):
        self.filename = filename
        super().__init__(f"{filename}: {message}")


# --- benchmark ---------------------------------------------------------------


class ParseError(VidsleuthError):
    """A benchmark dataset line could not be parsed."""

    def __init__(self, message: str, *, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


# --- service -----------------------------------------------------------------


class PolicyViolation(VidsleuthError):
    """Scheduling the post would break the configured posting policy."""


class PlatformRejection(VidsleuthError):
    """The platform refused the post; carries the platform's message."""


class IllegalTransition(VidsleuthError):
    """A run record was asked to move backwards or out of a terminal state."""
