from __future__ import annotations

import itertools

import pytest

from conftest import load
from pcsp.analysis import (
    acceptances_after, divergence_free, has_failure, has_trace,
    initials_after, normalise, perm_event_fn, permutation_bisim_check,
    refines_failures, refines_traces, strong_bisim, traces_upto,
)
from pcsp.errors import SemanticsError
from pcsp.lts import Event, rename_lts
from pcsp.parser import parse_definitions
from pcsp.std_semantics import build_lts
from pcsp.syntax import Stop, TVal


def ev(ch, *idx):
    return Event(ch, tuple(TVal(i) for i in idx))


# -- traces and failures ----------------------------------------------------

def test_traces_of_stop():
    defs = parse_definitions("channel a\n")
    lts = build_lts(defs, Stop(), 1)
    assert traces_upto(lts, 3) == {()}


def test_mutex_spec_traces(mutex):
    lts = build_lts(mutex, "Spec", 2)
    assert has_trace(lts, (ev("enterCS", 0), ev("leaveCS", 0)))
    assert not has_trace(lts, (ev("enterCS", 0), ev("leaveCS", 1)))


def test_traces_are_prefix_closed(mutex):
    lts = build_lts(mutex, "Impl", 2)
    tr = traces_upto(lts, 4)
    for t in tr:
        for i in range(len(t)):
            assert t[:i] in tr


def test_failures_of_selection():
    defs = parse_definitions("""
channel c : t
P = c$x:{0,1} -> STOP
""")
    lts = build_lts(defs, "P", 2)
    assert has_failure(lts, (), {ev("c", 1)})
    assert has_failure(lts, (), {ev("c", 0)})
    assert not has_failure(lts, (), {ev("c", 0), ev("c", 1)})


def test_refusals_are_subset_closed(mutex):
    lts = build_lts(mutex, "Impl", 2)
    sigma = sorted(lts.alphabet, key=str)
    for acc in acceptances_after(lts, (ev("enterCS", 0),)):
        refused = [e for e in sigma if e not in acc][:4]
        for k in range(len(refused) + 1):
            for sub in itertools.combinations(refused, k):
                assert has_failure(lts, (ev("enterCS", 0),), frozenset(sub))


def test_initials_after(mutex):
    lts = build_lts(mutex, "Spec", 2)
    assert initials_after(lts, ()) == {ev("enterCS", 0), ev("enterCS", 1)}
    assert initials_after(lts, (ev("enterCS", 1),)) == {ev("leaveCS", 1)}


# -- refinement -----------------------------------------------------------------

def test_refinement_reflexive_on_corpus(mutex, running):
    for lts in (build_lts(mutex, "Spec", 2), build_lts(mutex, "Impl", 2),
                build_lts(running, "P", 2)):
        assert refines_traces(lts, lts).holds
        assert refines_failures(lts, lts).holds


def test_refinement_transitive(mutex):
    from pcsp.reduction import CollapsingFn
    spec = build_lts(mutex, "Spec", 2)
    abst = build_lts(mutex, "Abst", 2)
    phi_impl = CollapsingFn(1).lts(build_lts(mutex, "Impl", 3))
    assert refines_traces(spec, abst).holds
    assert refines_traces(abst, phi_impl).holds
    assert refines_traces(spec, phi_impl).holds


def test_trace_counterexample_is_shortest():
    defs = parse_definitions("""
channel a, b
Spec = a -> Spec
Impl = a -> b -> STOP
""")
    v = refines_traces(build_lts(defs, "Spec", 1), build_lts(defs, "Impl", 1))
    assert not v.holds
    assert v.trace == (Event("a", ()), Event("b", ()))
    assert v.kind == "trace"


def test_failures_counterexample_reports_refusal():
    defs = parse_definitions("""
channel a, b
Spec = a -> STOP [] b -> STOP
Impl = a -> STOP |~| b -> STOP
""")
    assert refines_traces(build_lts(defs, "Spec", 1),
                          build_lts(defs, "Impl", 1)).holds
    v = refines_failures(build_lts(defs, "Spec", 1), build_lts(defs, "Impl", 1))
    assert not v.holds and v.kind == "refusal"
    assert v.trace == ()
    assert v.refusal in ({Event("a", ())}, {Event("b", ())})


def test_failures_divergent_spec_is_a_diagnostic():
    defs = parse_definitions("""
channel a
Div = Div |~| Div
Impl = a -> STOP
""")
    with pytest.raises(SemanticsError):
        refines_failures(build_lts(defs, "Div", 1), build_lts(defs, "Impl", 1))


def test_ex511_reproduction():
    from pcsp.reduction import CollapsingFn
    defs = load("ex511.pcsp")
    phi = CollapsingFn(1)
    spec_hat = build_lts(defs, "Spec", 2)
    impl3 = build_lts(defs, "Impl", 3)
    assert refines_failures(spec_hat, phi.lts(impl3)).holds
    v = refines_failures(build_lts(defs, "Spec", 3), impl3)
    assert not v.holds
    assert v.trace == ()
    assert v.refusal == {ev("c", 0, 0), ev("c", 1, 1), ev("c", 2, 2)}


def test_normalisation_is_deterministic_with_minimal_acceptances(mutex):
    norm = normalise(build_lts(mutex, "Impl", 2))
    for row in norm.trans:
        assert len(row) == len(set(row))
    for accs in norm.acceptances:
        for a, b in itertools.combinations(accs, 2):
            assert not (a <= b or b <= a)


# -- bisimulation -----------------------------------------------------------------

def test_bisim_reflexive(mutex):
    lts = build_lts(mutex, "Impl", 2)
    ok, _ = strong_bisim(lts, lts)
    assert ok


def test_bisim_depth_mismatch():
    defs = parse_definitions("""
channel a
P = a -> STOP
Q = a -> a -> STOP
""")
    ok, formula = strong_bisim(build_lts(defs, "P", 1), build_lts(defs, "Q", 1))
    assert not ok
    assert formula and "a" in formula


def test_bisimilar_implies_equal_denotations():
    from conftest import CORPUS_SEQ, load, proc_body
    from pcsp.cose import concretize
    from pcsp.syntax import substitute
    for fname, proc, init in CORPUS_SEQ:
        defs = load(fname)
        body = proc_body(defs, proc)
        closed = substitute(body, init) if init else body
        std = build_lts(defs, closed, 2)
        sym = concretize(defs, body, 2, init_env=init)
        assert strong_bisim(std, sym)[0], (fname, proc)
        for spec, impl in ((std, sym), (sym, std)):
            assert refines_traces(spec, impl).holds, (fname, proc)
            assert refines_failures(spec, impl).holds, (fname, proc)


# -- divergence ---------------------------------------------------------------------

def test_divergence_examples(mutex):
    assert divergence_free(build_lts(mutex, "Spec", 2))
    defs = parse_definitions("channel a\nDiv = Div |~| Div\n")
    assert not divergence_free(build_lts(defs, "Div", 1))
    defs2 = parse_definitions("channel a\n")
    assert divergence_free(build_lts(defs2, Stop(), 1))


def test_hidden_cycle_diverges():
    defs = parse_definitions("""
channel hid : t
Loop = hid$x:t -> Loop
HDiv = Loop \\ {|hid|}
""")
    assert not divergence_free(build_lts(defs, "HDiv", 2))


# -- semantic symmetry -----------------------------------------------------------------

def test_copy_is_symmetric():
    r = permutation_bisim_check(load("copy.pcsp"), "COPY", (2, 3))
    assert r.verdict == "evidence"


def test_ring_breaks_symmetry_at_the_papers_permutation():
    defs = load("ring.pcsp")
    lts = build_lts(defs, "Nodes", 4)
    perm = (2, 1, 3, 0)
    renamed = rename_lts(lts, perm_event_fn(perm))
    ok, _ = strong_bisim(lts, renamed)
    assert not ok
    # the named trace witnesses the asymmetry
    assert has_trace(lts, (ev("send", 1, 2),))
    assert not has_trace(lts, (ev("send", 1, 3),))


def test_everything_symmetric_at_size_one(mutex):
    r = permutation_bisim_check(mutex, "Impl", (1,))
    assert r.verdict == "evidence"


def test_symmetric_traces_remark(mutex):
    # full symmetry makes the bounded trace set invariant under bijections
    for n in (2, 3):
        lts = build_lts(mutex, "Impl", n)
        tr = traces_upto(lts, 4)
        for perm in itertools.permutations(range(n)):
            fn = perm_event_fn(perm)
            assert {tuple(fn(e) for e in t) for t in tr} == tr
