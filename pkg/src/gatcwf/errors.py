"""Exception hierarchy shared by all gatcwf modules."""

from __future__ import annotations


class GatError(Exception):
    """Base class for every error raised by this package."""


class LevelError(GatError):
    """Ill-scoped level variable or mismatched level-context sizes."""


class ParseError(GatError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ScopeError(GatError):
    """Unknown or duplicate name in a declaration stream."""


class DuplicateNameError(ScopeError):
    pass


class SortMismatchError(GatError):
    """A side condition of a typing rule failed conversion."""


class GuardFailedError(GatError):
    """The strict-order guard l < m on universe indices does not hold."""


class ModeViolationError(GatError):
    """Constructor not available under the active theory/flags."""


class AmbiguousContextError(SortMismatchError):
    """A context-polymorphic leaf appeared where no context is determined."""


class HoleError(SortMismatchError):
    """An elided argument could not be recovered from its surroundings."""


class FuelExhausted(GatError):
    """Conversion ran out of rewrite fuel; the query is undecided."""
