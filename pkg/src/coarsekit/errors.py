"""Exception types shared across the package."""


class CoarsekitError(Exception):
    """Base class for all package errors."""


class StructuralError(CoarsekitError):
    """Input objects are malformed or reference things that do not exist.

    Distinct from a mathematical verdict failure: a structurally broken
    certificate cannot even be checked.
    """


class ParseError(CoarsekitError):
    """A document could not be parsed. Carries 1-based line/column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PreconditionError(CoarsekitError):
    """A well-formed input fails a mathematical hypothesis of the operation."""
