from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from pcsp.errors import SemanticsError
from pcsp.parser import parse_definitions
from pcsp.syntax import (
    Atom, BANG, Condition, Construct, DOLLAR, Field, NamedType, Prefix,
    QUERY, Stop, T_TYPE, TVal, alpha_canonical, channels, classify_fields,
    comms, comms_nont, free_vars, replace_selections, substitute,
)

X_TYPE = NamedType("X", (Atom("X", "u", 0), Atom("X", "v", 1)))


def eps_construct() -> Construct:
    # c$x1:t?x2:t$x3:X!x4   (x4 an output variable of type t)
    return Construct("c", (
        Field(DOLLAR, "x1", T_TYPE),
        Field(QUERY, "x2", T_TYPE),
        Field(DOLLAR, "x3", X_TYPE),
        Field(BANG, "x4", None, bang_is_t=True),
    ), uid=1)


def test_classify_fields_worked_example():
    sets = classify_fields(eps_construct())
    assert sets.dollar_t == {1}
    assert sets.query_t == {2}
    assert sets.dollar_nont == {3}
    assert sets.bang == {4}
    assert sets.query_nont == frozenset()


def test_classify_fields_empty_construct():
    sets = classify_fields(Construct("done", ()))
    for s in (sets.dollar_t, sets.dollar_nont, sets.query_t,
              sets.query_nont, sets.bang_t, sets.bang_nont):
        assert s == frozenset()


def test_classify_fields_mutex_spec():
    alpha = Construct("enterCS", (Field(DOLLAR, "i", T_TYPE),))
    sets = classify_fields(alpha)
    assert sets.dollar_t == {1}
    assert not (sets.dollar_nont | sets.query | sets.bang)


def test_replace_selections_t_scope():
    out = replace_selections(eps_construct(), "t")
    sels = [(f.sel, f.payload) for f in out.fields]
    assert sels == [(BANG, "x1"), (QUERY, "x2"), (DOLLAR, "x3"), (BANG, "x4")]
    assert out.fields[0].ty is None and out.fields[0].bang_is_t


def test_replace_selections_both():
    out = replace_selections(eps_construct(), "both")
    assert [f.sel for f in out.fields] == [BANG, QUERY, BANG, BANG]


def test_replace_selections_identity_without_dollars():
    alpha = Construct("c", (Field(QUERY, "x", T_TYPE), Field(BANG, "x", None, True)))
    assert replace_selections(alpha, "both") == alpha


def test_replace_composition_matches_both():
    alpha = eps_construct()
    assert replace_selections(replace_selections(alpha, "t"), "non-t") \
        == replace_selections(alpha, "both")


# -- channels ---------------------------------------------------------------

def test_channels_stop_and_mutex_spec():
    defs = parse_definitions("""
channel enterCS, leaveCS : t
Spec = enterCS$i:t -> leaveCS!i -> Spec
""")
    assert channels(Stop(), defs) == frozenset()
    assert channels(defs.equations["Spec"].body, defs) == {"enterCS"}


def test_channels_choice_unions():
    defs = parse_definitions("""
channel a, b : t
P = a$x:t -> STOP |~| b$x:t -> STOP
""")
    assert channels(defs.equations["P"].body, defs) == {"a", "b"}


def test_channels_unguarded_cycle_diagnostic():
    defs = parse_definitions("""
channel a
P = Q [] a -> STOP
Q = P
""")
    with pytest.raises(SemanticsError):
        channels(defs.equations["P"].body, defs)
    got = channels(defs.equations["P"].body, defs, strict=False)
    assert got == {"a"}


# -- comms ------------------------------------------------------------------

def _running_defs():
    return parse_definitions("""
datatype AB = a | b
channel c : AB.t.t
channel d : AB
P = c$x:{a,b}$y:t?z:t -> if y==z then d!x -> STOP else STOP
""")


def test_comms_enumerates_inputs():
    defs = _running_defs()
    a = defs.datatypes["AB"][0]
    alpha = Construct("c", (
        Field(BANG, a, None, False),
        Field(BANG, TVal(0), None, True),
        Field(QUERY, "z", T_TYPE),
    ))
    got = comms(alpha, (TVal(0), TVal(1)))
    assert got == [(a, TVal(0), TVal(0)), (a, TVal(0), TVal(1))]


def test_comms_outputs_only_singleton():
    defs = _running_defs()
    a = defs.datatypes["AB"][0]
    alpha = Construct("d", (Field(BANG, a, None, False),))
    assert comms(alpha, (TVal(0),)) == [(a,)]


def test_comms_requires_no_selections():
    with pytest.raises(SemanticsError):
        comms(eps_construct(), (TVal(0),))


def test_comms_nont_keeps_t_symbolic():
    defs = _running_defs()
    a = defs.datatypes["AB"][0]
    alpha = Construct("c", (
        Field(BANG, a, None, False),
        Field(DOLLAR, "y", T_TYPE),
        Field(QUERY, "z", T_TYPE),
    ))
    events = comms_nont(alpha)
    assert len(events) == 1
    fields = events[0].fields
    assert fields[0].sel == BANG and fields[1].sel == DOLLAR and fields[2].sel == QUERY


def test_comms_nont_resolves_nont_inputs():
    defs = _running_defs()
    alpha = Construct("c", (
        Field(QUERY, "x", NamedType("AB", defs.datatypes["AB"])),
        Field(DOLLAR, "y", T_TYPE),
        Field(QUERY, "z", T_TYPE),
    ))
    events = comms_nont(alpha)
    assert len(events) == 2
    assert [f.fields[0].payload.name for f in events] == ["a", "b"]


# -- substitution, free variables, alpha canonicalisation --------------------

def test_substitute_single_occurrence():
    defs = parse_definitions("""
channel out : t
P(x) = out!x -> STOP
""")
    body = defs.equations["P"].body
    got = substitute(body, {"x": TVal(0)})
    assert isinstance(got, Prefix)
    assert got.construct.fields[0].payload == TVal(0)


def test_substitute_respects_shadowing():
    defs = parse_definitions("""
channel c, out : t
P(z) = c$z:t -> out!z -> STOP
""")
    body = defs.equations["P"].body
    got = substitute(body, {"z": TVal(1)})
    # the binder shadows the parameter, so the inner output keeps the variable
    assert got.cont.construct.fields[0].payload == "z"


def test_free_vars_residual():
    defs = parse_definitions("""
channel d : t
Q(x, y, z) = if y==z then d!x -> STOP else STOP
""")
    assert free_vars(defs.equations["Q"].body) == {"x", "y", "z"}


def test_alpha_canonical_identifies_renamings():
    defs = parse_definitions("""
channel c, d : t
P = c?a:t -> d!a -> STOP
Q = c?b:t -> d!b -> STOP
""")
    pa = alpha_canonical(defs.equations["P"].body)
    qb = alpha_canonical(defs.equations["Q"].body)
    assert pa == qb


def test_alpha_canonical_keeps_free_variables():
    defs = parse_definitions("""
channel c, d : t
P(v) = c?a:t -> d!v -> STOP
""")
    canon = alpha_canonical(defs.equations["P"].body)
    assert "v" in free_vars(canon)


# -- property tests ----------------------------------------------------------

_PRELUDE = """
datatype AB = a | b
channel ca : t
channel cb : AB.t
channel cc : t.t
"""
_VARS = ("v1", "v2", "v3")

_uid_counter = __import__("itertools").count(1000)


@st.composite
def terms(draw, scope=(), depth=3):
    """Random closed Seq terms over a small fixed channel universe; scope
    lists the t-variables bound so far."""
    opts = ["stop", "prefix"]
    if depth > 0:
        opts += ["ext", "int", "slide"]
        if len(scope) >= 2:
            opts.append("if")
    kind = draw(st.sampled_from(opts))
    if kind == "stop" or depth <= 0 and kind != "prefix":
        return Stop()
    if kind == "prefix":
        chan = draw(st.sampled_from(["ca", "cb", "cc"]))
        fields = []
        scope2 = list(scope)
        bound_here: set = set()
        if chan == "ca":
            sigs = [T_TYPE]
        elif chan == "cb":
            sigs = [NamedType("AB", (Atom("AB", "a", 0), Atom("AB", "b", 1))), T_TYPE]
        else:
            sigs = [T_TYPE, T_TYPE]
        for ty in sigs:
            fresh = [v for v in _VARS if v not in bound_here]
            if isinstance(ty, NamedType):
                which = draw(st.sampled_from(["bang", "query"]))
                if which == "bang":
                    fields.append(Field(BANG, ty.values[draw(st.integers(0, 1))],
                                        None, False))
                else:
                    var = draw(st.sampled_from(fresh))
                    fields.append(Field(QUERY, var, ty))
                    bound_here.add(var)
                    # a non-t binder shadows any t variable of the same name
                    scope2 = [v for v in scope2 if v != var]
            else:
                usable = [v for v in scope2 if v not in bound_here]
                choices = ["dollar", "query"] + (["bang"] if usable else [])
                which = draw(st.sampled_from(choices))
                if which == "bang":
                    fields.append(Field(BANG, draw(st.sampled_from(usable)),
                                        None, True))
                else:
                    var = draw(st.sampled_from(fresh))
                    fields.append(Field(DOLLAR if which == "dollar" else QUERY,
                                        var, T_TYPE))
                    bound_here.add(var)
                    scope2 = [v for v in scope2 if v != var] + [var]
        cont = draw(terms(scope=tuple(scope2), depth=depth - 1))
        return Prefix(Construct(chan, tuple(fields), uid=next(_uid_counter)), cont)
    if kind == "if":
        l, r = draw(st.sampled_from(
            [(a, b) for a in scope for b in scope if a != b]))
        cond = Condition(draw(st.booleans()), ((l, r),))
        from pcsp.syntax import If
        return If(cond, draw(terms(scope=scope, depth=depth - 1)),
                  draw(terms(scope=scope, depth=depth - 1)))
    from pcsp.syntax import ExtChoice, IntChoice, Sliding
    combine = {"ext": ExtChoice, "int": IntChoice, "slide": Sliding}[kind]
    return combine(draw(terms(scope=scope, depth=depth - 1)),
                   draw(terms(scope=scope, depth=depth - 1)))


@given(terms())
@settings(max_examples=120, deadline=None)
def test_alpha_canonical_idempotent(term):
    once = alpha_canonical(term)
    assert alpha_canonical(once) == once


@given(terms(scope=("xfree",)))
@settings(max_examples=120, deadline=None)
def test_substitute_removes_free_variable(term):
    got = substitute(term, {"xfree": TVal(0)})
    assert free_vars(got) == free_vars(term) - {"xfree"}


@given(terms())
@settings(max_examples=120, deadline=None)
def test_index_sets_partition(term):
    stack = [term]
    while stack:
        node = stack.pop()
        if isinstance(node, Prefix):
            sets = classify_fields(node.construct)
            k = node.construct.arity()
            union = (sets.dollar_t | sets.dollar_nont | sets.query_t
                     | sets.query_nont | sets.bang_t | sets.bang_nont)
            assert union == frozenset(range(1, k + 1))
            total = sum(len(s) for s in (
                sets.dollar_t, sets.dollar_nont, sets.query_t,
                sets.query_nont, sets.bang_t, sets.bang_nont))
            assert total == k
            stack.append(node.cont)
        elif hasattr(node, "left"):
            stack.extend([node.left, node.right])
        elif hasattr(node, "then"):
            stack.extend([node.then, node.els])


@given(terms())
@settings(max_examples=120, deadline=None)
def test_replace_scopes_compose(term):
    stack = [term]
    while stack:
        node = stack.pop()
        if isinstance(node, Prefix):
            alpha = node.construct
            assert replace_selections(replace_selections(alpha, "t"), "non-t") \
                == replace_selections(alpha, "both")
            stack.append(node.cont)
        elif hasattr(node, "left"):
            stack.extend([node.left, node.right])
        elif hasattr(node, "then"):
            stack.extend([node.then, node.els])
