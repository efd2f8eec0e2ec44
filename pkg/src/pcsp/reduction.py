"""Type reduction: collapsing functions, the two threshold computations
derived from the specification's symbolic transition system, and the
end-to-end parameterised-verification pipeline built on them.

A B-collapsing function is the identity below B and maps everything else to
B; the reduced type is {0..B}.  The traces threshold is the largest number
of output positions of type t jointly reachable on non-t-equivalent
symbolic traces; the failures threshold additionally counts, per stable
frontier, distinct output variables and (with multiplicity) deterministic
t-inputs, maximised over consistent valuations of the guarding conditions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .analysis import Verdict, divergence_free, refines
from .conditions import (
    check_no_mixed_inputs, check_seqnorm, revposconjeqt_evidence,
)
from .errors import SemanticsError
from .lts import Event, Lts, TAU, rename_lts
from .report import ConditionReport
from .ssos import Cond, Sslts, Vis, build_sslts, fmt_sym_label, nont_event_key
from .std_semantics import build_lts
from .syntax import (
    Condition, Construct, Definitions, TVal, Value, classify_fields,
)


# ---------------------------------------------------------------------------
# Collapsing functions and their liftings

@dataclass(frozen=True)
class CollapsingFn:
    """phi(v) = v for v < B, phi(v) = B otherwise; fixes non-t values."""

    bound: int

    def value(self, v: Value) -> Value:
        if isinstance(v, TVal):
            return TVal(min(v.index, self.bound))
        return v

    def event(self, e: Event) -> Event:
        return Event(e.channel, tuple(self.value(v) for v in e.values))

    def trace(self, tr) -> tuple:
        return tuple(self.event(e) for e in tr)

    def value_set(self, s) -> frozenset:
        return frozenset(self.value(v) for v in s)

    def event_set(self, s) -> frozenset:
        return frozenset(self.event(e) for e in s)

    def environment(self, env: dict) -> dict:
        return {k: self.value(v) for k, v in env.items()}

    def lts(self, l: Lts) -> Lts:
        return rename_lts(l, self.event)

    def inverse_value(self, v: Value, tsize: int) -> frozenset:
        if isinstance(v, TVal) and 0 <= v.index <= self.bound:
            return frozenset(tv for tv in (TVal(i) for i in range(tsize))
                             if self.value(tv) == v)
        return frozenset((v,))

    def inverse_event(self, e: Event, tsize: int) -> frozenset[Event]:
        domains = [sorted(self.inverse_value(v, tsize), key=str) for v in e.values]
        return frozenset(Event(e.channel, tuple(vs))
                         for vs in itertools.product(*domains))


# ---------------------------------------------------------------------------
# Traces threshold

@dataclass
class TraceWitness:
    trace_labels: tuple          # representative non-t class (visible labels)
    events: tuple                # contributing visible symbolic events
    positions: frozenset[int]    # union of the t-output index sets

    def render(self) -> str:
        from .pretty import fmt_construct
        tr = ", ".join(fmt_sym_label(l) for l in self.trace_labels)
        evs = " / ".join(fmt_construct(e) for e in self.events)
        pos = ",".join(str(i) for i in sorted(self.positions))
        return f"after <{tr}>: events {evs} with output positions {{{pos}}}"


@dataclass
class ThresholdReport:
    traces: int
    failures: Optional[int] = None
    traces_witness: Optional[TraceWitness] = None
    failures_witness: Optional[str] = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"traces": self.traces}
        if self.failures is not None:
            out["failures"] = self.failures
        if self.traces_witness:
            out["traces_witness"] = self.traces_witness.render()
        if self.failures_witness:
            out["failures_witness"] = self.failures_witness
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _cond_tau_closure(s: Sslts, seed) -> frozenset[int]:
    out = set(seed)
    stack = list(out)
    while stack:
        q = stack.pop()
        for lab, tgt, _ in s.edges[q]:
            if (lab is TAU or isinstance(lab, Cond)) and tgt not in out:
                out.add(tgt)
                stack.append(tgt)
    return frozenset(out)


def thresh_traces(s: Sslts, max_macro_states: int = 100_000) -> tuple[int, Optional[TraceWitness]]:
    """Maximum cardinality of the union of t-output index sets over classes
    of non-t-equivalent symbolic traces, computed by determinising the
    transition system over the non-t projection of its visible labels
    (conditional and internal labels collapse into the closure)."""
    from .errors import BoundExceeded
    root = _cond_tau_closure(s, (s.root,))
    best = 0
    witness = None
    seen = {root}
    queue = [(root, ())]
    while queue:
        if len(seen) > max_macro_states:
            raise BoundExceeded("subset-construction state", max_macro_states,
                                f"{len(queue)} macro-states pending")
        macro, rep = queue.pop(0)
        groups: dict = {}
        for q in sorted(macro):
            for lab, tgt, _ in s.edges[q]:
                if not isinstance(lab, Vis):
                    continue
                key = nont_event_key(lab.event)
                entry = groups.setdefault(key, ([], set(), set()))
                entry[0].append(lab.event)
                entry[1].update(classify_fields(lab.event).bang_t)
                entry[2].add(tgt)
        for key in sorted(groups):
            events, positions, targets = groups[key]
            if len(positions) > best:
                best = len(positions)
                witness = TraceWitness(rep, tuple(events), frozenset(positions))
            nxt = _cond_tau_closure(s, targets)
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, rep + (Vis(events[0]),)))
    return best, witness


# ---------------------------------------------------------------------------
# Failures threshold

def _atom_key(atom):
    l, r = atom
    a = l if isinstance(l, str) else f"#{l.index}"
    b = r if isinstance(r, str) else f"#{r.index}"
    return (a, b) if a <= b else (b, a)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _consistent(atoms, assignment) -> tuple[bool, int]:
    """Whether the truth assignment to equality atoms is satisfiable over an
    unbounded value domain, plus the number of equivalence classes involved
    (a bound on the instantiation size needed to realise it)."""
    uf = _UnionFind()
    terms = set()
    for (l, r), truth in zip(atoms, assignment):
        terms.add(l)
        terms.add(r)
        if truth:
            uf.union(l, r)
    classes: dict = {}
    for t in terms:
        classes.setdefault(uf.find(t), []).append(t)
    for members in classes.values():
        tvals = {m for m in members if isinstance(m, TVal)}
        if len(tvals) > 1:
            return False, 0
    for (l, r), truth in zip(atoms, assignment):
        if not truth and uf.find(l) == uf.find(r):
            return False, 0
    return True, len(classes)


def _frontiers(s: Sslts, start: int):
    """All (conditions-on-path, visible symbolic event) pairs reachable from
    the state through internal and conditional labels only."""
    results = []

    def dfs(state, conds, on_path):
        for lab, tgt, _ in s.edges[state]:
            if lab is TAU:
                if tgt not in on_path:
                    dfs(tgt, conds, on_path | {tgt})
            elif isinstance(lab, Cond):
                if tgt not in on_path:
                    dfs(tgt, conds + (lab.condition,), on_path | {tgt})
            else:
                results.append((conds, lab.event))

    dfs(start, (), frozenset((start,)))
    return results


def _cond_value(cond: Condition, atom_truth: dict) -> bool:
    v = all(atom_truth[_atom_key(a)] for a in cond.atoms)
    return (not v) if cond.negated else v


def thresh_failures(defs: Definitions, s: Sslts) -> tuple[int, Optional[str], list[str]]:
    """The stable-failures threshold: the traces threshold joined with, per
    state reachable at the start or right after a visible label and per
    consistent valuation of the guarding conditions, the count of distinct
    t-output variables plus t-input positions (with multiplicity) over the
    enabled frontier events.

    Returns (value, witness description, notes)."""
    notes = []
    t_best, _ = thresh_traces(s)
    best = t_best
    witness = None
    max_classes = 0
    candidates = {s.root}
    for st in range(s.n_states()):
        for lab, tgt, _ in s.edges[st]:
            if isinstance(lab, Vis):
                candidates.add(tgt)
    for st in sorted(candidates):
        frontier = _frontiers(s, st)
        atom_keys = sorted({_atom_key(a) for conds, _ in frontier
                            for c in conds for a in c.atoms})
        atoms = list(atom_keys)
        if len(atoms) > 20:
            from .errors import BoundExceeded
            raise BoundExceeded("condition-valuation", 2 ** 20,
                                f"{len(atoms)} distinct equality atoms")
        for assignment in itertools.product((True, False), repeat=len(atoms)):
            ok, classes = _consistent(atoms, assignment)
            if not ok:
                continue
            truth = dict(zip(atoms, assignment))
            enabled: dict = {}
            for conds, eps in frontier:
                if all(_cond_value(c, truth) for c in conds):
                    enabled[(eps.channel,) + _event_struct(eps)] = eps
            out_vars = set()
            q_count = 0
            for eps in enabled.values():
                sets = classify_fields(eps)
                for i in sets.bang_t:
                    payload = eps.fields[i - 1].payload
                    if isinstance(payload, str):
                        out_vars.add(payload)
                q_count += len(sets.query_t)
            value = len(out_vars) + q_count
            if value > best:
                best = value
                desc = ", ".join(sorted(out_vars)) or "-"
                witness = (f"state {st}: output variables {{{desc}}} plus "
                           f"{q_count} deterministic t-input(s)")
                max_classes = max(max_classes, classes)
    if max_classes > best + 1:
        notes.append(
            f"realising the maximising condition valuation needs #T >= "
            f"{max_classes}, larger than the threshold bound {best + 1}")
    return best, witness, notes


def _event_struct(e: Construct):
    parts = []
    for f in e.fields:
        parts.append((f.sel, str(f.payload), str(f.ty) if f.ty else ""))
    return tuple(parts)


def compute_thresholds(defs: Definitions, spec: str, model: str,
                       max_states: int = 100_000) -> ThresholdReport:
    """Threshold(s) of a specification for the requested model.  The failures
    threshold requires the specification to be SeqNorm with no construct
    mixing t-selections and inputs."""
    s = build_sslts(defs, spec, max_states)
    t_val, t_wit = thresh_traces(s)
    report = ThresholdReport(traces=t_val, traces_witness=t_wit)
    if model == "failures":
        norm = check_seqnorm(spec, defs)
        mixed = check_no_mixed_inputs(spec, defs)
        if not norm.ok():
            raise SemanticsError(
                "failures threshold requires a SeqNorm specification")
        if not mixed.ok():
            raise SemanticsError(
                "failures threshold undefined: a construct combines a "
                "nondeterministic t-selection with a deterministic input")
        f_val, f_wit, notes = thresh_failures(defs, s)
        report.failures = f_val
        report.failures_witness = f_wit
        report.notes += notes
        report.notes.append(
            "frontier states reachable through conditional labels from the "
            "root are included (safe over-approximation)")
    return report


# ---------------------------------------------------------------------------
# End-to-end verification

@dataclass
class SizeResult:
    n: int
    lhs: str
    rhs: str
    method: str  # 'theorem' | 'direct'
    verdict: Verdict

    def to_dict(self) -> dict:
        out = {"n": self.n, "lhs": self.lhs, "rhs": self.rhs,
               "method": self.method}
        out.update(self.verdict.to_dict())
        if not self.verdict.holds:
            out["counterexample"] = self.verdict.counterexample_str()
        return out


@dataclass
class PmcpVerdict:
    mode: str                 # 'via-abstraction' | 'direct-per-size'
    model: str
    bound: Optional[int]      # B, when the theorem applies
    thresholds: Optional[ThresholdReport]
    conditions: list[ConditionReport]
    sizes: list[SizeResult]
    premises: list[SizeResult]
    conclusion: str
    caveats: list[str]

    def holds(self) -> bool:
        return (all(r.verdict.holds for r in self.sizes)
                and all(r.verdict.holds for r in self.premises)
                and all(c.ok() for c in self.conditions))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "model": self.model,
            "B": self.bound,
            "thresholds": self.thresholds.to_dict() if self.thresholds else None,
            "conditions": [c.to_dict() for c in self.conditions],
            "sizes": [r.to_dict() for r in self.sizes],
            "premises": [r.to_dict() for r in self.premises],
            "conclusion": self.conclusion,
            "caveats": list(self.caveats),
        }


def verify_pmcp(defs: Definitions, spec: str, impl: str, model: str,
                sizes, *, abst: Optional[str] = None,
                valid_from: Optional[int] = None,
                premise_sizes=(), eqt_sizes=(2, 3),
                assume_typesym: bool = False,
                max_states: int = 200_000) -> PmcpVerdict:
    """Run the reduction pipeline: check the theorem hypotheses, compute the
    threshold, and either derive a universally quantified conclusion through
    a user-supplied abstraction or discharge the requested sizes one by one.

    Any failed hypothesis downgrades the verdict to direct per-size checks.
    """
    conditions = []
    caveats = []
    hypotheses_ok = True

    seqnorm = check_seqnorm(spec, defs)
    conditions.append(seqnorm)
    if not seqnorm.ok():
        hypotheses_ok = False

    if seqnorm.ok():
        eqt = revposconjeqt_evidence(spec, defs, model, eqt_sizes, max_states)
        conditions.append(eqt)
        if eqt.verdict == "fail":
            hypotheses_ok = False
        else:
            caveats.append(
                "the equality-test hypothesis is evidence-only "
                f"(sampled at sizes {{{','.join(map(str, eqt_sizes))}}})")

    if model == "failures":
        mixed = check_no_mixed_inputs(spec, defs)
        conditions.append(mixed)
        if not mixed.ok():
            hypotheses_ok = False

    from .conditions import check_typesym_syntactic
    typesym = check_typesym_syntactic(impl, defs)
    conditions.append(typesym)
    if not typesym.ok():
        if assume_typesym:
            caveats.append(
                "implementation symmetry in t is user-asserted (the "
                "syntactic sufficient condition fails)")
        else:
            hypotheses_ok = False

    thresholds = None
    bound = None
    if hypotheses_ok:
        try:
            thresholds = compute_thresholds(defs, spec, model, max_states)
            bound = (thresholds.traces if model == "traces"
                     else thresholds.failures)
        except SemanticsError as exc:
            caveats.append(f"threshold computation failed: {exc}")
            hypotheses_ok = False

    size_list = sorted(set(sizes))
    results: list[SizeResult] = []
    premises: list[SizeResult] = []
    conclusion = ""

    def direct(n: int) -> SizeResult:
        lhs = build_lts(defs, spec, n, max_states)
        rhs = build_lts(defs, impl, n, max_states)
        return SizeResult(n, f"{spec}({{0..{n - 1}}})", f"{impl}({{0..{n - 1}}})",
                          "direct", refines(lhs, rhs, model))

    if not hypotheses_ok:
        for n in size_list:
            results.append(direct(n))
        conclusion = "hypothesis failure: per-size direct results only"
        return PmcpVerdict("direct-per-size", model, bound, thresholds,
                           conditions, results, premises, conclusion, caveats)

    hat = bound + 1  # size of the reduced type {0..B}
    spec_hat = build_lts(defs, spec, hat, max_states)

    if model == "failures":
        for n in sorted(set(size_list + [hat])):
            if not divergence_free(build_lts(defs, spec, n, max_states)):
                caveats.append(f"specification diverges at #T={n}")
                hypotheses_ok = False
        caveats.append(
            "divergence-freedom of the specification checked at the "
            "requested sizes only")
        if not hypotheses_ok:
            for n in size_list:
                results.append(direct(n))
            return PmcpVerdict("direct-per-size", model, bound, thresholds,
                               conditions, results, premises,
                               "hypothesis failure: per-size direct results only",
                               caveats)

    op = "[T=" if model == "traces" else "[F="

    if abst is not None:
        if valid_from is None:
            raise ValueError("via-abstraction mode needs the bound from which "
                             "the abstraction premise holds (valid_from)")
        abst_hat = build_lts(defs, abst, hat, max_states)
        v = refines(spec_hat, abst_hat, model)
        results_bound = max(valid_from, bound + 1)
        premises.append(SizeResult(
            hat, f"{spec}({{0..{bound}}})", f"{abst}({{0..{bound}}})",
            "abstraction", v))
        caveats.append(
            f"the premise {abst}({{0..{bound}}}) {op} phi({impl}(T)) for "
            f"#T >= {valid_from} is taken on assertion from the abstraction "
            "method")
        for n in premise_sizes:
            impl_n = build_lts(defs, impl, n, max_states)
            phi_impl = CollapsingFn(bound).lts(impl_n)
            premises.append(SizeResult(
                n, f"{abst}({{0..{bound}}})", f"phi({impl}({{0..{n - 1}}}))",
                "premise-sample", refines(abst_hat, phi_impl, model)))
        for n in [n for n in size_list if n < results_bound]:
            results.append(direct(n))
        if v.holds and all(p.verdict.holds for p in premises):
            conclusion = (f"{spec}(T) {op} {impl}(T) for all instantiations "
                          f"with #T >= {results_bound}")
        else:
            conclusion = "abstraction check failed: no universal conclusion"
        return PmcpVerdict("via-abstraction", model, bound, thresholds,
                           conditions, results, premises, conclusion, caveats)

    derived = []
    for n in size_list:
        if n >= bound + 1:
            impl_n = build_lts(defs, impl, n, max_states)
            phi_impl = CollapsingFn(bound).lts(impl_n)
            v = refines(spec_hat, phi_impl, model)
            results.append(SizeResult(
                n, f"{spec}({{0..{bound}}})", f"phi({impl}({{0..{n - 1}}}))",
                "theorem", v))
            if v.holds:
                derived.append(n)
        else:
            results.append(direct(n))
    if derived:
        conclusion = (f"{spec}(T_n) {op} {impl}(T_n) derived via the reduced "
                      f"type for n in {{{','.join(map(str, derived))}}}")
    else:
        conclusion = "per-size results"
    return PmcpVerdict("direct-per-size", model, bound, thresholds,
                       conditions, results, premises, conclusion, caveats)


# ---------------------------------------------------------------------------
# The worked proposition instances as executable checks

_BIGPROP_SRC = """
channel c : t.t.t
channel d : t
Proc(x) = c!x$y:t?z:t -> if y==z then d!x -> STOP else d$w:t -> STOP
"""


@dataclass
class BigPropCase:
    name: str
    description: str
    holds: bool


def bigprop_testcases() -> list[BigPropCase]:
    """Membership and non-membership checks, over the process
    c!x$y:t?z:t -> if y=z then d!x -> STOP else d$w:t -> STOP at #T = 3 with
    B = 1, that instantiate the trace- and failure-extension propositions."""
    from .analysis import has_failure, has_trace
    from .cose import concretize
    from .parser import parse_definitions

    defs = parse_definitions(_BIGPROP_SRC, "<bigprops>")
    tsize = 3
    tv = [TVal(i) for i in range(tsize)]
    body = defs.equations["Proc"].body

    def lts_with(x: int) -> Lts:
        return concretize(defs, body, tsize, init_env={"x": TVal(x)})

    l0 = lts_with(0)
    l2 = lts_with(2)

    def ev(ch, *idx):
        return Event(ch, tuple(TVal(i) for i in idx))

    cases = []

    holds = all(has_trace(l0, (ev("c", 0, v2.index, v3.index),))
                for v2 in tv for v3 in tv)
    cases.append(BigPropCase(
        "traces-1", "x=0: <c.0.v2.v3> is a trace for all v2, v3", holds))

    holds = all(not has_trace(l2, (ev("c", 1, v2.index, v3.index),))
                for v2 in tv for v3 in tv)
    cases.append(BigPropCase(
        "traces-2", "x=2: no trace <c.1.v2.v3> (collapsed output excluded)", holds))

    holds = all(has_trace(l0, (ev("c", 0, 0, 2), ev("d", v.index))) for v in tv)
    cases.append(BigPropCase(
        "traces-3", "x=0 after <c.0.0.2>: every d.v is available", holds))

    holds = has_trace(l0, (ev("c", 0, 1, 2), ev("d", 0)))
    cases.append(BigPropCase(
        "traces-4", "x=0 after <c.0.1.2>: d.0 is available (negative branch "
        "covers the positive one)", holds))

    all_c = {Event("c", (a, b, c)) for a in tv for b in tv for c in tv}
    all_d = {Event("d", (v,)) for v in tv}

    x1 = all_c - {Event("c", (TVal(0), TVal(1), v)) for v in tv}
    cases.append(BigPropCase(
        "failures-1", "x=0: (<>, {|c|} - {|c.0.1|}) is a failure",
        has_failure(l0, (), x1)))

    x2 = {e for e in all_c if e.values[0] == TVal(2)}
    cases.append(BigPropCase(
        "failures-2", "x=2: (<>, {|c.2|}) is not a failure",
        not has_failure(l2, (), x2)))

    x3 = all_c | {Event("d", (v,)) for v in tv if v != TVal(2)}
    cases.append(BigPropCase(
        "failures-3", "x=0: (<c.0.0.2>, {|c|} u {d.v | v /= 2}) is a failure",
        has_failure(l0, (ev("c", 0, 0, 2),), x3)))

    x4 = all_c | {Event("d", (v,)) for v in tv if v != TVal(0)}
    cases.append(BigPropCase(
        "failures-4", "x=0: (<c.0.1.2>, {|c|} u {d.v | v /= 0}) is a failure",
        has_failure(l0, (ev("c", 0, 1, 2),), x4)))

    return cases
