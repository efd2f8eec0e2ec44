"""Parameterised verification toolkit for a CSP subset.

Front end: parser for .pcsp files.  Semantics: a standard concrete
operational semantics, a semi-symbolic one with the distinguished type t
left uninstantiated, and a translation semantics over (state, environment)
configurations.  Analyses: traces/stable-failures refinement, strong
bisimulation, syntactic side-condition checkers, and type-reduction
thresholds with the end-to-end verification pipeline built on them.
"""

from .errors import BoundExceeded, ParseError, PcspError, SemanticsError
from .parser import parse_definitions, parse_file

__all__ = [
    "BoundExceeded", "ParseError", "PcspError", "SemanticsError",
    "parse_definitions", "parse_file",
]

__version__ = "0.1.0"
