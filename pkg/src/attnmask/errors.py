"""Exception hierarchy shared across the library."""
from __future__ import annotations


class AttnMaskError(Exception):
    """Base class for every error raised by this package."""


class StackValidationError(AttnMaskError):
    """A stack violates one or more probability/structure invariants.

    Carries the full list of :class:`attnmask.stack.Violation` records so
    callers can report every problem, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations)
        super().__init__(f"stack failed validation ({len(self.violations)} violation(s)): {lines}")


class ArchiveError(AttnMaskError):
    """Malformed archive bytes."""


class BadMagicError(ArchiveError):
    """Stream does not start with the ATNP magic."""


class UnsupportedVersionError(ArchiveError):
    """Archive declares a format version this reader does not speak."""


class TruncatedRecordError(ArchiveError):
    """Stream ended before a declared record was complete."""


class DimensionMismatchError(ArchiveError):
    """Record dims are inconsistent with its declared role or payload."""


class UnknownLabelError(AttnMaskError):
    """A region selection referenced label ids absent from the mask."""

    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__(f"unknown label id(s): {self.ids}")


class MissingCrossAttentionError(AttnMaskError):
    """Text guidance was requested but the stack has no cross-attention."""


class ExtractorError(AttnMaskError):
    """The external extractor command failed or produced a bad archive."""


class ConfigError(AttnMaskError):
    """A run configuration value is out of range or inconsistent."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)
