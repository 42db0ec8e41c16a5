"""Exception types shared across the package."""


class AbcmixError(Exception):
    """Base class for all package-specific errors."""


class DegenerateSampleError(AbcmixError, ValueError):
    """A sample has zero spread, so no density estimate exists for it."""


class DegenerateSystemError(AbcmixError, ValueError):
    """A particle system has collapsed (zero spread in every usable slot)."""


class ConfigurationError(AbcmixError, ValueError):
    """An operation was requested with inconsistent or missing configuration."""


class ParseError(AbcmixError, ValueError):
    """A data or config file could not be parsed; message carries the line."""


class EngineAbort(AbcmixError, RuntimeError):
    """The sampler cannot make progress; carries a diagnostic payload.

    Attributes
    ----------
    reason : str
        Machine-readable tag (e.g. ``"max_attempts_exceeded"``).
    details : dict
        Free-form diagnostic numbers for the run log.
    """

    def __init__(self, reason: str, message: str, details: dict | None = None):
        super().__init__(message)
        self.reason = reason
        self.details = details or {}
