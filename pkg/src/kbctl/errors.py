"""Exception hierarchy shared by every kbctl module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Position of a token in a source file (1-based line and column)."""

    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class KBError(Exception):
    """Base class for all knowledge-base errors.

    ``span`` is set whenever the error can be traced to source text.
    """

    def __init__(self, message: str, span: SourceSpan | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.span}: {self.message}"


class KindConflict(KBError):
    pass


class UndeclaredSymbol(KBError):
    pass


class DuplicateAxiomId(KBError):
    pass


class UnsafeRule(KBError):
    def __init__(self, message: str, variables=(), span: SourceSpan | None = None) -> None:
        super().__init__(message, span)
        self.variables = tuple(variables)


class ParseError(KBError):
    pass


class NegationUnsupported(ParseError):
    pass


class UnknownPrefix(ParseError):
    pass


class UnprojectableVariable(ParseError):
    pass


class NotEntailed(KBError):
    pass


class UnknownSymbol(KBError):
    pass
