from __future__ import annotations

import pytest

from pcsp.analysis import (
    has_trace, initials_after, refines_failures, refines_traces, traces_upto,
)
from pcsp.dot import lts_to_dot
from pcsp.errors import BoundExceeded, SemanticsError
from pcsp.lts import Event, TAU, rename_lts
from pcsp.parser import parse_definitions
from pcsp.std_semantics import build_lts
from pcsp.syntax import Stop, TVal


def ev(ch, *idx):
    return Event(ch, tuple(TVal(i) for i in idx))


def test_stop_lts():
    defs = parse_definitions("channel a\n")
    lts = build_lts(defs, Stop(), 1)
    assert lts.n_states() == 1 and lts.n_edges() == 0


def test_fig1_structure(running):
    lts = build_lts(defs=running, proc="P", tsize=2)
    root_edges = lts.edges[lts.root]
    assert len(root_edges) == 2 and all(l is TAU for l, _, _ in root_edges)
    for _, s1, _ in root_edges:
        level1 = lts.edges[s1]
        assert len(level1) == 2 and all(l is TAU for l, _, _ in level1)
        for _, s2, _ in level1:
            vis = [l for l, _, _ in lts.edges[s2] if l is not TAU]
            assert len(vis) == 2
            assert all(l.channel == "c" for l in vis)


def test_two_runs_identical(running):
    a = build_lts(running, "P", 2)
    b = build_lts(running, "P", 2)
    assert a.keys == b.keys
    assert a.edges == b.edges


def test_bound_exceeded_names_frontier(mutex):
    with pytest.raises(BoundExceeded) as exc:
        build_lts(mutex, "Impl", 3, max_states=5)
    assert "state bound (5)" in str(exc.value)


def test_unbound_identifier():
    defs = parse_definitions("channel a\nP = a -> Q0\nQ0 = STOP\n")
    from pcsp.syntax import Ident
    with pytest.raises(SemanticsError):
        build_lts(defs, Ident("Missing", ()), 1)


def test_mutex_impl_alphabet_and_exclusion(mutex):
    lts = build_lts(mutex, "Impl", 2)
    labels = {l for es in lts.edges for l, _, _ in es if l is not TAU}
    assert all(l.channel in ("enterCS", "leaveCS") for l in labels)
    # the implementation meets the mutual-exclusion specification directly
    spec = build_lts(mutex, "Spec", 2)
    assert refines_traces(spec, lts).holds
    assert refines_failures(spec, lts).holds
    # no reachable state offers two distinct enterCS events at once
    for s in range(lts.n_states()):
        enters = {l for l, _, _ in lts.edges[s]
                  if l is not TAU and l.channel == "enterCS"}
        assert len(enters) <= 1


def test_rename_identity(mutex):
    lts = build_lts(mutex, "Spec", 2)
    same = rename_lts(lts, lambda e: e)
    assert same.edges == lts.edges


def test_rename_collapses_event(mutex):
    lts = build_lts(mutex, "Spec", 3)
    phi = lambda e: Event(e.channel, tuple(
        TVal(min(v.index, 1)) if isinstance(v, TVal) else v for v in e.values))
    out = rename_lts(lts, phi)
    labels = {str(l) for es in out.edges for l, _, _ in es if l is not TAU}
    assert "enterCS.2" not in labels and "enterCS.1" in labels


def test_visible_events_follow_comms(running):
    lts = build_lts(running, "P", 2)
    for es in lts.edges:
        for l, _, _ in es:
            if l is not TAU:
                assert l.channel in ("c", "d")
                assert l in lts.alphabet


def test_source_level_renaming():
    defs = parse_definitions("""
channel a, b : t
P = (a$x:t -> STOP) [[ b <- a ]]
""")
    lts = build_lts(defs, "P", 2)
    labels = {str(l) for es in lts.edges for l, _, _ in es if l is not TAU}
    assert labels == {"b.0", "b.1"}


def test_relational_renaming_duplicates_events():
    defs = parse_definitions("""
channel a, b, c
P = (a -> STOP) [[ b <- a, c <- a ]]
""")
    lts = build_lts(defs, "P", 1)
    labels = {str(l) for es in lts.edges for l, _, _ in es if l is not TAU}
    assert labels == {"b", "c"}


def test_sliding_choice_times_out():
    defs = parse_definitions("""
channel a, b
P = a -> STOP [> b -> STOP
""")
    lts = build_lts(defs, "P", 1)
    assert has_trace(lts, (Event("a", ()),))
    assert has_trace(lts, (Event("b", ()),))
    # after the timeout tau only b remains
    tau_targets = [t for l, t, _ in lts.edges[lts.root] if l is TAU]
    assert any(
        {str(l) for l, _, _ in lts.edges[t] if l is not TAU} == {"b"}
        for t in tau_targets)


def test_shared_parallel_synchronises():
    defs = parse_definitions("""
channel m : t
channel a, b
P = (m$x:t -> a -> STOP) [|{|m|}|] (m?y:t -> b -> STOP)
""")
    lts = build_lts(defs, "P", 2)
    tr = traces_upto(lts, 3)
    assert (ev("m", 0), Event("a", ()), Event("b", ())) in tr
    assert (ev("m", 0), Event("b", ()), Event("a", ())) in tr
    assert not any(t and t[0].channel in "ab" for t in tr if t)


def test_alphabetised_parallel_blocks_outside_alphabet():
    defs = parse_definitions("""
channel a, b, shared
P = (a -> shared -> STOP) [{a, shared} || {b, shared}] (b -> shared -> STOP)
""")
    lts = build_lts(defs, "P", 1)
    tr = traces_upto(lts, 3)
    assert (Event("a", ()), Event("b", ()), Event("shared", ())) in tr
    assert (Event("a", ()), Event("shared", ())) not in tr


def test_replicated_internal_choice_over_t():
    defs = parse_definitions("""
channel out : t
P = |~| i:t @ out!i -> STOP
""")
    lts = build_lts(defs, "P", 3)
    root_edges = lts.edges[lts.root]
    assert len(root_edges) == 3 and all(l is TAU for l, _, _ in root_edges)
    assert initials_after(lts, ()) == {ev("out", 0), ev("out", 1), ev("out", 2)}


def test_repeated_nont_input_variable_binds_left_to_right():
    # allowed shape: a non-t input repeated as a later output of the same
    # communication echoes the value just read
    defs = parse_definitions("""
datatype Y = u | v
channel cy : Y.Y
P = cy?y:Y!y -> STOP
""")
    lts = build_lts(defs, "P", 1)
    got = {t[0] for t in traces_upto(lts, 1) if t}
    assert {str(e) for e in got} == {"cy.u.u", "cy.v.v"}
    from pcsp.cose import concretize
    from pcsp.analysis import strong_bisim
    assert strong_bisim(lts, concretize(defs, "P", 1))[0]


def test_replicated_alphabetised_parallel_over_t():
    defs = parse_definitions("""
channel c : t
channel g
P = || i:t @ [{|c.i, g|}] (c.i -> g -> STOP)
""")
    lts = build_lts(defs, "P", 2)
    tr = traces_upto(lts, 4)
    g = Event("g", ())
    assert (ev("c", 0), ev("c", 1), g) in tr
    assert (ev("c", 1), ev("c", 0), g) in tr
    # g is shared between all indexed alphabets, so it waits for every node
    assert (ev("c", 0), g) not in tr


def test_visible_edges_conform_to_their_construct(running):
    from pcsp.syntax import Prefix, comms
    lts = build_lts(running, "P", 2)
    tvals = (TVal(0), TVal(1))
    for idx, term in enumerate(lts.states):
        if not isinstance(term, Prefix):
            continue
        allowed = {Event(term.construct.channel, vs)
                   for vs in comms(term.construct, tvals)} \
            if not any(f.sel == "$" for f in term.construct.fields) else None
        for lab, _, uid in lts.edges[idx]:
            if lab is not TAU and allowed is not None:
                assert lab in allowed
                assert uid == term.construct.uid


def test_dot_output_is_stable(mutex):
    a = lts_to_dot(build_lts(mutex, "Spec", 2))
    b = lts_to_dot(build_lts(mutex, "Spec", 2))
    assert a == b
    assert a.startswith("digraph") and "enterCS.0" in a
