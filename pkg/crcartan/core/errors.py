"""Error hierarchy shared by the services, the CLI and the HTTP layer."""
from typing import List, Optional


class CRCartanError(Exception):
    """Base class; `exit_code` is what the CLI returns."""

    exit_code = 2


class ParseError(CRCartanError):
    """Spec text could not be parsed or validated."""

    exit_code = 1

    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}")


class DomainError(CRCartanError):
    """A value left the domain of a function, or a geometric precondition failed."""

    def __init__(self, message: str, subexpression: Optional[str] = None):
        self.subexpression = subexpression
        if subexpression:
            message = f"{message} in `{subexpression}`"
        super().__init__(message)


class OrderExhaustedError(DomainError):
    """A derivative was requested from a jet with no remaining order."""


class GaugeMismatchError(CRCartanError):
    """Tractors written in different gauges were combined."""


class InternalInconsistencyError(CRCartanError):
    """A solve that cannot fail on admissible input failed."""


class CheckFailure(CRCartanError):
    """One or more identity checks exceeded their tolerance."""

    exit_code = 3

    def __init__(self, failed: List[str]):
        self.failed = failed
        super().__init__(f"{len(failed)} check(s) failed: " + ", ".join(failed))
