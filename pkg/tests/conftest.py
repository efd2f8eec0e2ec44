from __future__ import annotations

from functools import lru_cache

import pytest

from pcsp.cli import corpus_path
from pcsp.parser import parse_file
from pcsp.syntax import TVal


@lru_cache(maxsize=None)
def load(name: str):
    return parse_file(corpus_path(name))


# Sequential corpus processes usable by every semantics; the optional third
# element closes root free variables.
CORPUS_SEQ = [
    ("running.pcsp", "P", None),
    ("mutex.pcsp", "Spec", None),
    ("copy.pcsp", "COPY", None),
    ("ex315.pcsp", "R1", None),
    ("ex315.pcsp", "R2", None),
    ("traces-count.pcsp", "P", None),
    ("traces-count.pcsp", "Q", None),
    ("ex511.pcsp", "Spec", None),
    ("ex512.pcsp", "Spec", None),
    ("bigprops.pcsp", "Proc", {"x": TVal(0)}),
    ("ex33.pcsp", "SeqOK", None),
]

# The subset that additionally satisfies the normality condition.
SEQNORM_SPECS = [
    ("running.pcsp", "P", None),
    ("mutex.pcsp", "Spec", None),
    ("copy.pcsp", "COPY", None),
    ("ex315.pcsp", "R1", None),
    ("ex315.pcsp", "R2", None),
    ("traces-count.pcsp", "P", None),
    ("traces-count.pcsp", "Q", None),
    ("ex511.pcsp", "Spec", None),
    ("ex512.pcsp", "Spec", None),
    ("bigprops.pcsp", "Proc", {"x": TVal(0)}),
    ("ex33.pcsp", "SeqOK", None),
]

ALL_CORPUS_FILES = [
    "running.pcsp", "mutex.pcsp", "copy.pcsp", "ring.pcsp", "ex33.pcsp",
    "ex315.pcsp", "ex511.pcsp", "ex512.pcsp", "bigprops.pcsp",
    "traces-count.pcsp",
]


def proc_body(defs, proc: str):
    """Equation body, usable for parameterised processes too."""
    return defs.equations[proc].body


@pytest.fixture(scope="session")
def mutex():
    return load("mutex.pcsp")


@pytest.fixture(scope="session")
def running():
    return load("running.pcsp")
