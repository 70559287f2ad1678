"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`BimetricError`
so callers (the CLI in particular) can map failures to exit codes.
"""

from __future__ import annotations


class BimetricError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(BimetricError, ValueError):
    """Malformed expression source. ``offset`` is a byte offset into the source."""

    def __init__(self, message: str, offset: int, source: str = ""):
        self.message = message
        self.offset = offset
        self.source = source
        super().__init__(f"{message} (at byte offset {offset})")


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnknownFunctionError(ExprSyntaxError):
    pass


class DomainError(BimetricError, ArithmeticError):
    """A value or derivative is undefined or non-finite at the requested point."""

    def __init__(self, message: str, offset: int | None = None, source: str = "", point=None):
        self.offset = offset
        self.source = source
        self.point = point
        where = ""
        if offset is not None:
            where = f" at byte offset {offset}"
            if source:
                where += f" of {source!r}"
        if point is not None:
            where += f" (point {[float(c) for c in point]})"
        super().__init__(message + where)


class SingularPointError(DomainError):
    """A point fails the chart's domain guard."""


class NotPositiveDefiniteError(DomainError):
    """Metric components failed the Cholesky factorization."""


class TensorIndexError(BimetricError, IndexError):
    pass


class VarianceError(BimetricError, ValueError):
    pass


class ShapeError(BimetricError, ValueError):
    """Unsupported rank/dimension or mismatched tensor shapes."""


class ChartMismatchError(BimetricError, ValueError):
    pass


class ManifestError(BimetricError, ValueError):
    """Malformed metric manifest (bad JSON, missing fields, asymmetric matrix)."""


class NotFoundError(BimetricError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "not found"


class ConfigurationError(BimetricError, ValueError):
    """Invalid combination of inputs, e.g. an empty sampling region."""
