"""Exception types raised across the package.

Every error carries enough context (offsets, names, candidates) for a CLI
to print a one-line diagnostic without re-parsing anything.
"""
from __future__ import annotations


class SqlShapeError(Exception):
    """Base class for all errors raised by this package."""


class ParseFailure(SqlShapeError):
    """The SQL text could not be parsed.

    ``offset`` is a 0-based byte offset into the source text; ``expected``
    is the parser's description of what it was looking for.
    """

    def __init__(self, message: str, offset: int = 0, expected: str = ""):
        super().__init__(message)
        self.offset = offset
        self.expected = expected


class UnsupportedConstruct(SqlShapeError):
    """The statement parsed but uses a construct outside the query subset."""

    def __init__(self, construct: str, offset: int = 0):
        super().__init__(f"unsupported construct: {construct}")
        self.construct = construct
        self.offset = offset


class MultipleStatements(SqlShapeError):
    """More than one top-level statement was passed to a single-statement API."""


class DuplicateTable(SqlShapeError):
    """DDL defines the same table name twice."""

    def __init__(self, table: str):
        super().__init__(f"duplicate table in DDL: {table}")
        self.table = table


class AmbiguousColumn(SqlShapeError):
    """A bare column name matches several in-scope tables (strict mode only)."""

    def __init__(self, name: str, candidates: list[str]):
        super().__init__(f"ambiguous column {name!r}: candidates {sorted(candidates)}")
        self.name = name
        self.candidates = sorted(candidates)


class EmptyInput(SqlShapeError):
    """An operation that requires non-empty input received none."""


class ZeroBaseline(SqlShapeError):
    """A normalization baseline mean is zero for some metric."""

    def __init__(self, metric: str):
        super().__init__(f"baseline mean is zero for metric {metric!r}")
        self.metric = metric


class LlmUnavailable(SqlShapeError):
    """The LLM client could not produce a completion."""


class ValidatorUnavailable(SqlShapeError):
    """The validation engine could not be reached or refused the session."""
