"""Error and diagnostic types shared across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    """A positioned message, printed as ``file:line:col: message``."""

    message: str
    line: int = 0
    col: int = 0
    filename: str = "<input>"

    def render(self) -> str:
        return f"{self.filename}:{self.line}:{self.col}: {self.message}"


class PcspError(Exception):
    """Base class for all toolkit errors."""


class ParseError(PcspError):
    """Lexical, syntactic or resolution failure; carries positioned diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.render() for d in self.diagnostics))


class SemanticsError(PcspError):
    """A transition rule was applied outside its precondition (caller bug or
    ill-formed input that slipped past the checkers)."""


class BoundExceeded(PcspError):
    """State-space or trace-depth bound exceeded; names the frontier state."""

    def __init__(self, what: str, bound: int, frontier: str):
        self.bound = bound
        self.frontier = frontier
        super().__init__(f"{what} bound ({bound}) exceeded at: {frontier}")


def parse_error(message: str, line: int = 0, col: int = 0, filename: str = "<input>") -> ParseError:
    return ParseError([Diagnostic(message, line, col, filename)])
