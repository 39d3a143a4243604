"""Exception types shared across the pipeline."""

from __future__ import annotations


class TabseqError(Exception):
    """Base class for all pipeline errors."""


class EmptyHeaders(TabseqError):
    """Raised when a table is constructed with no header row."""


class EmptyTable(TabseqError):
    """Raised when a table is constructed with no data rows."""


class ParseError(TabseqError):
    """A manifest or config file could not be parsed at all."""


class ValidationError(TabseqError):
    """A manifest or config violates a constraint; message names the field."""


class DecodeError(TabseqError):
    """A single corpus record is malformed; collected, never fatal."""


class AllColumnsInvalid(TabseqError):
    """Every column of a table was removed during sanitization."""

    def __init__(self, message: str, example_id: str | None = None):
        super().__init__(message)
        self.example_id = example_id


class NotApplicable(TabseqError):
    """Operation invoked on a context kind it is not defined for."""


class UnknownObjective(TabseqError):
    """No task-identifier token exists for the requested objective."""


class TokenizerContractViolation(TabseqError):
    """A tokenizer adapter split a reserved token into multiple pieces."""


class EmptyRegion(TabseqError):
    """Span corruption requested over a region with no tokens."""


class NoHeaders(TabseqError):
    """Header masking requested on a sequence without header extents."""


class SkipRecord(TabseqError):
    """An example cannot produce the requested record; reroute or drop it."""


class NoContext(TabseqError):
    """Generation requested for an example without text or SQL context."""


class TooShort(TabseqError):
    """Context has too few words to split for the completion objective."""


class EntryReadError(TabseqError):
    """A mixture entry's record file could not be read."""


class LeakageError(TabseqError):
    """A mixture entry contains ids present in its exclusion list."""
