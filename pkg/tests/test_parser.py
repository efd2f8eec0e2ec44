from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from conftest import ALL_CORPUS_FILES, load
from pcsp.errors import ParseError
from pcsp.parser import parse_definitions
from pcsp.pretty import fmt_definitions
from pcsp.syntax import ExtChoice, Prefix, TVal

MUTEX_CORE = """
channel getToken, enterCS, leaveCS, returnToken : t
Node(i) = getToken.i -> Entering(i)
Entering(i) = enterCS.i -> CS(i)
CS(i) = leaveCS.i -> Leaving(i)
Leaving(i) = returnToken.i -> Node(i)
Nodes = ||| i:t @ Node(i)
Controller = getToken?i:t -> returnToken?j:t -> Controller
Impl = (Nodes [|{|getToken, returnToken|}|] Controller) \\ {|getToken, returnToken|}
Spec = enterCS$i:t -> leaveCS!i -> Spec
"""


def test_mutex_core_transcription():
    defs = parse_definitions(MUTEX_CORE)
    assert len(defs.equations) == 8
    assert sorted(defs.channels) == ["enterCS", "getToken", "leaveCS", "returnToken"]
    assert all(len(sig) == 1 for sig in defs.channels.values())
    assert defs.equations["Node"].param_types == ("t",)


def test_empty_file():
    defs = parse_definitions("")
    assert not defs.equations and not defs.channels


def test_seq_vi_violation_is_not_a_parse_error():
    defs = parse_definitions("""
channel c : t.t
P = c?x:t!x -> STOP
""")
    assert isinstance(defs.equations["P"].body, Prefix)


def test_roundtrip_on_all_corpus_files():
    for name in ALL_CORPUS_FILES:
        defs = load(name)
        text = fmt_definitions(defs)
        again = parse_definitions(text, filename=f"roundtrip:{name}")
        assert sorted(again.equations) == sorted(defs.equations), name
        for eq_name, eq in defs.equations.items():
            eq2 = again.equations[eq_name]
            assert eq2.params == eq.params, (name, eq_name)
            assert eq2.body == eq.body, (name, eq_name)
        assert again.channels == defs.channels
        assert again.datatypes == defs.datatypes


def test_diagnostics_carry_positions():
    with pytest.raises(ParseError) as exc:
        parse_definitions("channel c : t\nP = c$ -> STOP\n", filename="f.pcsp")
    d = exc.value.diagnostics[0]
    assert d.filename == "f.pcsp" and d.line == 2 and d.col > 0


def test_duplicate_definition_rejected():
    with pytest.raises(ParseError) as exc:
        parse_definitions("channel a\nP = a -> STOP\nP = STOP\n")
    assert "duplicate" in str(exc.value)


def test_undeclared_channel_rejected():
    with pytest.raises(ParseError) as exc:
        parse_definitions("P = c!0 -> STOP\n")
    assert "undeclared channel" in str(exc.value)


def test_arity_mismatch_rejected():
    with pytest.raises(ParseError) as exc:
        parse_definitions("channel c : t.t\nP = c?x:t -> STOP\n")
    assert "takes 2 field" in str(exc.value)


def test_undefined_variable_rejected():
    with pytest.raises(ParseError) as exc:
        parse_definitions("channel c : t\nP = c!y -> STOP\n")
    assert "undefined variable 'y'" in str(exc.value)


def test_trivial_condition_rejected():
    with pytest.raises(ParseError) as exc:
        parse_definitions("""
channel c : t
P = c?x:t -> if x==x then STOP else STOP
""")
    assert "trivial condition" in str(exc.value)


def test_replicated_nont_choice_desugars_to_binary():
    defs = parse_definitions("""
datatype Y = y1 | y2
channel c : Y
P = [] y:Y @ c!y -> STOP
""")
    body = defs.equations["P"].body
    assert isinstance(body, ExtChoice)
    assert isinstance(body.left, Prefix) and isinstance(body.right, Prefix)
    assert body.left.construct.fields[0].payload.name == "y1"


def test_numeric_argument_coerced_for_t_parameter():
    defs = parse_definitions("""
channel c : t
N(i) = c!i -> N(i)
P = N(0)
""")
    body = defs.equations["P"].body
    assert body.args == (TVal(0),)


def test_annotation_defaults_to_signature_type():
    defs = parse_definitions("""
channel out : t
P = out$z -> STOP
""")
    field = defs.equations["P"].body.construct.fields[0]
    assert field.sel == "$" and field.is_t()


def test_assertions_parsed(mutex):
    kinds = {(a.lhs, a.model, a.rhs) for a in mutex.assertions}
    assert ("Spec", "traces", "Impl") in kinds
    assert ("Spec", "failures", "Impl") in kinds


@given(st.text(max_size=200))
@settings(max_examples=200, deadline=None)
def test_parser_never_crashes_on_arbitrary_text(text):
    try:
        parse_definitions(text)
    except ParseError:
        pass


_ROUNDTRIP_PRELUDE = """
datatype AB = a | b
channel ca : t
channel cb : AB.t
channel cc : t.t
"""


@given(st.data())
@settings(max_examples=100, deadline=None)
def test_random_terms_roundtrip(data):
    from pcsp.pretty import fmt_term
    from test_syntax import terms
    term = data.draw(terms())
    src = _ROUNDTRIP_PRELUDE + f"TestP = {fmt_term(term)}\n"
    defs = parse_definitions(src, "rt")
    assert defs.equations["TestP"].body == term


@given(st.binary(max_size=120))
@settings(max_examples=120, deadline=None)
def test_parser_never_crashes_on_arbitrary_bytes(raw):
    try:
        parse_definitions(raw.decode("utf-8", errors="replace"))
    except ParseError:
        pass
