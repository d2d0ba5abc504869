"""Exception types shared across the package."""


class VideoAuditError(Exception):
    """Base class for all package-specific failures."""


class ShapeMismatchError(VideoAuditError):
    """Operands have incompatible dimensions."""


class FormatError(VideoAuditError):
    """A serialized artifact (VTR1 file, JSON record) is malformed."""


class ConfigurationError(VideoAuditError):
    """A configuration value makes the requested run impossible."""


class IntegrityError(VideoAuditError):
    """Dataset collections and manifest disagree."""


class QueryError(VideoAuditError):
    """A prediction oracle failed to answer."""


class MissingPredictionError(QueryError):
    """A file-backed oracle has no entry for the requested sample."""


class QueryBudgetExceededError(QueryError):
    """The per-audit query budget ran out."""


class ScoringError(VideoAuditError):
    """Evaluation-model scoring aborted; carries partial progress."""

    def __init__(self, message, completed=0, failed_id=None):
        super().__init__(message)
        self.completed = completed
        self.failed_id = failed_id


class AuditPowerWarning(UserWarning):
    """The effective sample count is too small for any rejection at alpha."""
