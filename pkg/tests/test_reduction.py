from __future__ import annotations

import pytest

from conftest import load, proc_body
from pcsp.analysis import refines
from pcsp.lts import Event
from pcsp.parser import parse_definitions
from pcsp.reduction import (
    CollapsingFn, bigprop_testcases, compute_thresholds, thresh_failures,
    thresh_traces, verify_pmcp,
)
from pcsp.ssos import Vis, build_sslts, nont_event_key, symbolic_traces
from pcsp.std_semantics import build_lts
from pcsp.syntax import TVal, classify_fields


def ev(ch, *idx):
    return Event(ch, tuple(TVal(i) for i in idx))


# -- collapsing functions -----------------------------------------------------

def test_phi_values():
    phi = CollapsingFn(1)
    assert phi.value(TVal(0)) == TVal(0)
    assert phi.value(TVal(1)) == TVal(1)
    assert phi.value(TVal(2)) == TVal(1)


def test_phi_trace_pointwise():
    phi = CollapsingFn(1)
    assert phi.trace((ev("c", 0, 1, 2),)) == (ev("c", 0, 1, 1),)


def test_phi_environment():
    phi = CollapsingFn(1)
    assert phi.environment({"x": TVal(2)}) == {"x": TVal(1)}


def test_phi_inverse():
    phi = CollapsingFn(1)
    assert phi.inverse_event(ev("c", 1), 3) == {ev("c", 1), ev("c", 2)}
    assert phi.inverse_event(ev("c", 0), 3) == {ev("c", 0)}


def test_phi_idempotent_and_fixed_below_bound(mutex):
    phi = CollapsingFn(1)
    from pcsp.std_semantics import file_alphabet, tvalues_for
    for e in sorted(file_alphabet(mutex, tvalues_for(3)), key=str):
        assert phi.event(phi.event(e)) == phi.event(e)
        if all(v.index < 1 for v in e.values):
            assert phi.event(e) == e


# -- thresholds -----------------------------------------------------------------

def oracle_traces_threshold(s, depth: int) -> int:
    """Independent brute-force evaluation of the traces threshold: enumerate
    every symbolic trace ending in a visible event up to the depth, group by
    the non-t projection, and take the largest union of t-output index
    sets."""
    groups = {}
    for sigma in symbolic_traces(s, depth):
        if not sigma or not isinstance(sigma[-1], Vis):
            continue
        key = tuple(nont_event_key(l.event) for l in sigma if isinstance(l, Vis))
        groups.setdefault(key, set()).update(
            classify_fields(sigma[-1].event).bang_t)
    return max((len(v) for v in groups.values()), default=0)


def test_mutex_spec_thresholds(mutex):
    s = build_sslts(mutex, "Spec")
    assert thresh_traces(s)[0] == 1
    assert thresh_failures(mutex, s)[0] == 1
    assert oracle_traces_threshold(s, 4) == 1


def test_traces_count_p_threshold():
    defs = load("traces-count.pcsp")
    s = build_sslts(defs, "P")
    value, witness = thresh_traces(s)
    assert value == 2
    assert witness.positions == {1, 2}
    assert oracle_traces_threshold(s, 4) == 2


def test_traces_count_q_threshold_against_oracle():
    defs = load("traces-count.pcsp")
    s = build_sslts(defs, "Q")
    expected = oracle_traces_threshold(s, 4)
    assert expected == 1
    assert thresh_traces(s)[0] == expected


def test_stop_threshold():
    defs = parse_definitions("channel a : t\n")
    from pcsp.syntax import Stop
    s = build_sslts(defs, Stop())
    assert thresh_traces(s)[0] == 0
    assert thresh_failures(defs, s)[0] == 0


def test_failures_threshold_at_least_traces():
    for fname, proc in (("mutex.pcsp", "Spec"), ("copy.pcsp", "COPY"),
                        ("bigprops.pcsp", "Proc"), ("ex512.pcsp", "Spec")):
        defs = load(fname)
        s = build_sslts(defs, proc_body(defs, proc))
        assert thresh_failures(defs, s)[0] >= thresh_traces(s)[0], (fname, proc)


def test_mixed_inputs_rejected_before_failures_threshold():
    defs = load("ex511.pcsp")
    from pcsp.errors import SemanticsError
    with pytest.raises(SemanticsError):
        compute_thresholds(defs, "Spec", "failures")


def test_conditional_free_bound():
    # without conditionals the threshold never exceeds the largest
    # per-construct t-output count, with equality when all are reachable
    for fname, proc in (("mutex.pcsp", "Spec"), ("copy.pcsp", "COPY"),
                        ("ex511.pcsp", "Spec"), ("ex512.pcsp", "Spec"),
                        ("ex33.pcsp", "SeqOK")):
        defs = load(fname)
        from pcsp.syntax import iter_constructs
        body = proc_body(defs, proc)
        per_construct = max(
            (len(classify_fields(a).bang_t)
             for a in iter_constructs(body, defs)), default=0)
        got = thresh_traces(build_sslts(defs, body))[0]
        assert got <= per_construct, (fname, proc)
        assert got == per_construct, (fname, proc)


def test_failures_threshold_counts_inputs():
    # one distinct output variable, plus the t inputs of every frontier
    # event counted with multiplicity: {x} + #{y} + #{z} = 3
    defs = parse_definitions("""
channel c : t.t
channel d : t
P = d?x:t -> (c!x?y:t -> P [] d?z:t -> P)
""")
    s = build_sslts(defs, "P")
    assert thresh_traces(s)[0] == 1
    assert thresh_failures(defs, s)[0] == 3


def test_bigprops_failures_threshold():
    defs = load("bigprops.pcsp")
    s = build_sslts(defs, proc_body(defs, "Proc"))
    assert thresh_traces(s)[0] == 1
    value, witness, _notes = thresh_failures(defs, s)
    assert value >= 1


# -- the eight proposition instances ----------------------------------------------

def test_bigprop_cases_all_hold():
    cases = bigprop_testcases()
    assert len(cases) == 8
    for case in cases:
        assert case.holds, case.name


# -- the pipeline ----------------------------------------------------------------------

@pytest.mark.parametrize("model", ["traces", "failures"])
def test_mutex_pipeline(model, mutex):
    verdict = verify_pmcp(
        mutex, "Spec", "Impl", model, sizes=[1, 2, 3, 4],
        abst="Abst", valid_from=3, premise_sizes=(3, 4, 5))
    assert verdict.mode == "via-abstraction"
    assert verdict.bound == 1
    assert verdict.holds()
    assert "#T >= 3" in verdict.conclusion
    assert {r.n for r in verdict.sizes} == {1, 2}
    assert all(r.verdict.holds for r in verdict.sizes)
    assert all(p.verdict.holds for p in verdict.premises)


def test_ex511_pipeline_downgrades():
    defs = load("ex511.pcsp")
    verdict = verify_pmcp(defs, "Spec", "Impl", "failures", sizes=[3],
                          assume_typesym=True)
    assert verdict.mode == "direct-per-size"
    assert not verdict.holds()
    row = verdict.sizes[0]
    assert row.method == "direct" and not row.verdict.holds
    assert row.verdict.refusal == {ev("c", 0, 0), ev("c", 1, 1), ev("c", 2, 2)}
    mixed = [c for c in verdict.conditions if c.name == "no-mixed-inputs"]
    assert mixed and mixed[0].verdict == "fail"


def test_phi_set_liftings():
    phi = CollapsingFn(1)
    assert phi.value_set({TVal(0), TVal(2)}) == {TVal(0), TVal(1)}
    assert phi.event_set({ev("c", 2), ev("c", 1)}) == {ev("c", 1)}


def test_failing_equality_test_hypothesis_downgrades():
    defs = load("ex315.pcsp")
    verdict = verify_pmcp(defs, "R2", "R2", "traces", sizes=[2])
    assert verdict.mode == "direct-per-size"
    eqt = [c for c in verdict.conditions if c.name.startswith("RevPosConjEqT")]
    assert eqt and eqt[0].verdict == "fail"
    # the direct check still runs (reflexive, so it holds)
    assert verdict.sizes[0].method == "direct"
    assert verdict.sizes[0].verdict.holds
    assert "hypothesis failure" in verdict.conclusion


def test_theorem_route_without_abstraction(mutex):
    verdict = verify_pmcp(mutex, "Spec", "Impl", "traces", sizes=[2, 3])
    assert verdict.bound == 1
    rows = {r.n: r for r in verdict.sizes}
    assert rows[2].method == "theorem" and rows[2].verdict.holds
    assert rows[3].method == "theorem" and rows[3].verdict.holds


@pytest.mark.parametrize("model", ["traces", "failures"])
def test_reduction_soundness_corroboration(model, mutex):
    # whenever the collapsed check passes, the direct check passes too
    B = 1
    phi = CollapsingFn(B)
    spec_hat = build_lts(mutex, "Spec", B + 1)
    for n in range(B + 1, B + 4):
        impl = build_lts(mutex, "Impl", n)
        collapsed = refines(spec_hat, phi.lts(impl), model)
        direct = refines(build_lts(mutex, "Spec", n), impl, model)
        assert collapsed.holds
        assert direct.holds


def test_ex511_traces_reduction_at_zero_bound():
    # with no t outputs the traces threshold is 0, and the reduction through
    # the single-value type is sound in the traces model
    defs = load("ex511.pcsp")
    assert compute_thresholds(defs, "Spec", "traces").traces == 0
    phi = CollapsingFn(0)
    spec_hat = build_lts(defs, "Spec", 1)
    for n in (1, 2, 3):
        impl = build_lts(defs, "Impl", n)
        assert refines(spec_hat, phi.lts(impl), "traces").holds
        assert refines(build_lts(defs, "Spec", n), impl, "traces").holds


def test_ex512_reproduction():
    defs = load("ex512.pcsp")
    phi = CollapsingFn(1)
    spec_hat = build_lts(defs, "Spec", 2)
    impl4 = build_lts(defs, "Impl", 4)
    assert refines(spec_hat, phi.lts(impl4), "failures").holds
    v = refines(build_lts(defs, "Spec", 4), impl4, "failures")
    assert not v.holds
    # the refusal hits every identity on some non-t value
    refused_ids = {e.values[0] for e in v.refusal if e.channel == "c"}
    assert refused_ids == {TVal(0), TVal(1), TVal(2), TVal(3)}
