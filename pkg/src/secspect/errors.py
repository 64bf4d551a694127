"""Domain exceptions shared across the toolkit.

Every error carries a stable machine-readable ``code`` so that the CLI and the
HTTP service can surface failures uniformly without leaking stack traces.
"""


class SecspectError(Exception):
    """Base class for all domain errors."""

    code = "ERROR"


class NotAUserStory(SecspectError):
    """The text does not follow the role / feature / reason story skeleton."""

    code = "NOT_A_USER_STORY"


class FormatError(SecspectError):
    """A structured input file violates its documented schema."""

    code = "FORMAT_ERROR"


class CollisionError(FormatError):
    """A lexicon entry collides with an existing lemma of the same word class."""

    code = "LEXICON_COLLISION"


class AlreadyStarted(SecspectError):
    """start was called on a session object that is already running."""

    code = "ALREADY_STARTED"


class SessionNotRunning(SecspectError):
    """A mutation was attempted on a session that is not in the running state."""

    code = "SESSION_NOT_RUNNING"


class UnknownLocation(SecspectError):
    """A defect record points at a requirement row or specification id that is
    not part of the session's package."""

    code = "UNKNOWN_LOCATION"


class DuplicateRecord(SecspectError):
    """A defect with the same type and location was already recorded."""

    code = "DUPLICATE_RECORD"


class MalformedInconsistency(SecspectError):
    """An inconsistency record names fewer than two specifications."""

    code = "MALFORMED_INCONSISTENCY"


class KeyMismatch(SecspectError):
    """The answer key does not cover the same stories as the scored session."""

    code = "KEY_MISMATCH"


class EmptyGroup(SecspectError):
    """A group comparison was requested but one side has no observations."""

    code = "EMPTY_GROUP"


class ZeroVariance(SecspectError):
    """Cohen's d is undefined because the pooled standard deviation is zero."""

    code = "ZERO_VARIANCE"


class SchemaVersionError(SecspectError):
    """An artifact envelope declares a schema version this build does not read."""

    code = "SCHEMA_VERSION"


class DigestMismatch(SecspectError):
    """An artifact envelope's payload does not match its content digest."""

    code = "DIGEST_MISMATCH"
