"""Syntactic side-condition checkers on specification and implementation
processes: data independence, the sequential normality conditions, the
symmetry-in-t sufficient condition, the mixed-input restriction, and the
sampled equality-test refinement property.

Each checker walks the process syntax, unfolding identifiers at most once,
and reports violations clause by clause.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .report import ConditionReport, Finding
from .syntax import (
    AlphaPar, BANG, Condition, Construct, Definitions, DiffType,
    DOLLAR, EventSet, ExtChoice, Hide, Ident, If, IntChoice, Interleave,
    MixedGuard, NamedType, Prefix, ProcessTerm, QUERY, Rename, ReplAlphaPar,
    ReplExtChoice, ReplIntChoice, ReplInterleave, SetType, SharedPar,
    Sliding, Stop, TType, TVal, channels, classify_fields, free_vars,
    substitute,
)

ProcRef = Union[str, ProcessTerm]


def _root(proc: ProcRef, defs: Definitions) -> tuple[ProcessTerm, str, set]:
    if isinstance(proc, str):
        eq = defs.equations.get(proc)
        if eq is None:
            raise KeyError(f"undefined process {proc!r}")
        return eq.body, proc, {proc}
    return proc, "<term>", set()


def _walk(term: ProcessTerm, defs: Definitions, where: str,
          seen: Optional[set] = None) -> Iterator[tuple[ProcessTerm, str]]:
    """Yield every node of the syntax, unfolding each identifier once."""
    if seen is None:
        seen = set()
    yield term, where
    if isinstance(term, Prefix):
        yield from _walk(term.cont, defs, where, seen)
    elif isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
        yield from _walk(term.left, defs, where, seen)
        yield from _walk(term.right, defs, where, seen)
    elif isinstance(term, If):
        yield from _walk(term.then, defs, where, seen)
        yield from _walk(term.els, defs, where, seen)
    elif isinstance(term, (Hide, Rename)):
        yield from _walk(term.proc, defs, where, seen)
    elif isinstance(term, (AlphaPar, SharedPar)):
        yield from _walk(term.left, defs, where, seen)
        yield from _walk(term.right, defs, where, seen)
    elif isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
        yield from _walk(term.body, defs, where, seen)
    elif isinstance(term, Ident):
        eq = defs.equations.get(term.name)
        if eq is not None and term.name not in seen:
            seen.add(term.name)
            yield from _walk(eq.body, defs, term.name, seen)


def _tvals_in_construct(alpha: Construct):
    for f in alpha.fields:
        if f.sel == BANG:
            if isinstance(f.payload, TVal):
                yield f.payload
        else:
            ty = f.ty
            items = ()
            if isinstance(ty, SetType):
                items = ty.items
            elif isinstance(ty, DiffType):
                items = ty.excluded
            for i in items:
                if isinstance(i, TVal):
                    yield i


def _tvals_in_guard(g):
    if isinstance(g, Condition):
        for l, r in g.atoms:
            if isinstance(l, TVal):
                yield l
            if isinstance(r, TVal):
                yield r
    elif isinstance(g, MixedGuard):
        for l, r in g.t_atoms:
            if isinstance(l, TVal):
                yield l
            if isinstance(r, TVal):
                yield r


def _tvals_in_evset(s: EventSet):
    for c in s.closures:
        for d in c.datums:
            if isinstance(d, TVal):
                yield d
    for e in s.literals:
        for d in e.datums:
            if isinstance(d, TVal):
                yield d


def _t_constants(node: ProcessTerm, include_alphabets: bool):
    if isinstance(node, Prefix):
        yield from _tvals_in_construct(node.construct)
    elif isinstance(node, If):
        yield from _tvals_in_guard(node.guard)
    elif isinstance(node, Ident):
        for a in node.args:
            if isinstance(a, TVal):
                yield a
    elif include_alphabets:
        if isinstance(node, Hide):
            yield from _tvals_in_evset(node.hidden)
        elif isinstance(node, AlphaPar):
            yield from _tvals_in_evset(node.left_alpha)
            yield from _tvals_in_evset(node.right_alpha)
        elif isinstance(node, SharedPar):
            yield from _tvals_in_evset(node.shared)
        elif isinstance(node, ReplAlphaPar):
            yield from _tvals_in_evset(node.alpha)


def _nonwhole_t_selections(node: ProcessTerm):
    """$ or ? fields (and replicated internal choice domains) that select from
    a set involving t other than the whole of t."""
    if isinstance(node, Prefix):
        for f in node.construct.fields:
            if f.sel in (DOLLAR, QUERY) and f.is_t() and not isinstance(f.ty, TType):
                yield f"{f.sel}{f.payload}:{f.ty}"
    elif isinstance(node, ReplIntChoice) and not isinstance(node.domain, TType):
        yield f"|~| {node.var}:{node.domain}"


# ---------------------------------------------------------------------------
# Data independence

def check_data_independence(proc: ProcRef, defs: Definitions) -> ConditionReport:
    """Syntactic data independence in t: no t-indexed replication other than
    replicated internal choice over the whole of t, no t constants, and no
    selections from proper subsets of t."""
    term, name, seen = _root(proc, defs)
    findings = []
    for node, where in _walk(term, defs, name, seen):
        if isinstance(node, (ReplInterleave, ReplAlphaPar, ReplExtChoice)):
            findings.append(Finding(
                "i", "replicated construct indexed over a set depending on t", where))
        elif isinstance(node, ReplIntChoice) and not isinstance(node.domain, TType):
            findings.append(Finding(
                "i", "replicated internal choice not over the whole of t", where))
        for v in _t_constants(node, include_alphabets=True):
            findings.append(Finding("iii", f"constant {v} of type t", where))
        if isinstance(node, Prefix):
            for desc in _nonwhole_t_selections(node):
                findings.append(Finding(
                    "vi", f"selection {desc} from a set involving t", where))
    verdict = "fail" if findings else "pass"
    return ConditionReport("data-independence", verdict, findings)


# ---------------------------------------------------------------------------
# Seq

def _dollar_t_binders(term: ProcessTerm, defs: Definitions,
                      seen: Optional[set] = None) -> frozenset[str]:
    out = set()
    for node, _ in _walk(term, defs, "", seen if seen is not None else set()):
        if isinstance(node, Prefix):
            for f in node.construct.fields:
                if f.sel == DOLLAR and f.is_t():
                    out.add(f.payload)
    return frozenset(out)


def check_seq(proc: ProcRef, defs: Definitions) -> ConditionReport:
    """The sequential-fragment condition on specifications."""
    term, name, seen = _root(proc, defs)
    findings = []
    di = check_data_independence(proc, defs)
    for f in di.findings:
        findings.append(Finding("i", f"not data independent: ({f.clause}) {f.message}",
                                f.where))
    for node, where in _walk(term, defs, name, seen):
        if isinstance(node, (Hide, Rename)):
            what = "hiding" if isinstance(node, Hide) else "renaming"
            findings.append(Finding("ii", f"contains {what}", where))
        elif isinstance(node, (AlphaPar, SharedPar, Interleave,
                               ReplAlphaPar, ReplInterleave)):
            findings.append(Finding("ii", "not sequential: "
                                    f"{type(node).__name__} operator", where))
        elif isinstance(node, (ReplIntChoice, ReplExtChoice)):
            kind = ("internal" if isinstance(node, ReplIntChoice) else "external")
            findings.append(Finding("iii", f"replicated {kind} choice", where))
        elif isinstance(node, If) and isinstance(node.guard, MixedGuard):
            findings.append(Finding(
                "iv", "guard mixes variables of type t with other types", where))
        elif isinstance(node, (ExtChoice, Sliding)):
            lb = _dollar_t_binders(node.left, defs)
            rb = _dollar_t_binders(node.right, defs)
            lf = free_vars(node.left)
            rf = free_vars(node.right)
            for clash in sorted((lb & rf) | (rb & lf)):
                findings.append(Finding(
                    "v", f"nondeterministic-selection variable {clash!r} of one "
                    "choice argument is free in the other", where))
            # selections of both arguments sharing a name cause the same
            # overwriting of stored values while the choice is unresolved
            for clash in sorted((lb & rb) - (lf | rf)):
                findings.append(Finding(
                    "v", f"nondeterministic-selection variable {clash!r} is "
                    "bound in both choice arguments", where))
        if isinstance(node, Prefix):
            alpha = node.construct
            bound_t = [f.payload for f in alpha.fields
                       if f.sel in (DOLLAR, QUERY) and f.is_t()]
            for var in bound_t:
                occurrences = sum(
                    1 for f in alpha.fields
                    if (f.sel in (DOLLAR, QUERY) and f.payload == var)
                    or (f.sel == BANG and f.payload == var))
                if occurrences > 1:
                    findings.append(Finding(
                        "vi", f"input variable {var!r} of type t occurs "
                        f"{occurrences} times in one construct", where))
    verdict = "fail" if findings else "pass"
    return ConditionReport("Seq", verdict, findings)


# ---------------------------------------------------------------------------
# SeqNorm

def _initial_t_conditional(term: ProcessTerm, defs: Definitions,
                           seen: Optional[set] = None) -> bool:
    """A conditional choice on t occurs before any prefix on some spine."""
    if seen is None:
        seen = set()
    if isinstance(term, (Stop, Prefix)):
        return False
    if isinstance(term, (ExtChoice, IntChoice, Sliding)):
        return (_initial_t_conditional(term.left, defs, seen)
                or _initial_t_conditional(term.right, defs, seen))
    if isinstance(term, If):
        if isinstance(term.guard, (Condition, MixedGuard)):
            return True
        return (_initial_t_conditional(term.then, defs, seen)
                or _initial_t_conditional(term.els, defs, seen))
    if isinstance(term, Ident):
        if term.name in seen:
            return False
        seen.add(term.name)
        eq = defs.equations.get(term.name)
        return eq is not None and _initial_t_conditional(eq.body, defs, seen)
    return False


def check_seqnorm(proc: ProcRef, defs: Definitions) -> ConditionReport:
    """Seq plus normality: choice arguments use disjoint channel sets and have
    no conditional choice on t before a prefix."""
    term, name, seen = _root(proc, defs)
    base = check_seq(proc, defs)
    findings = [Finding("Seq", f"({f.clause}) {f.message}", f.where)
                for f in base.findings]
    if not base.findings:
        for node, where in _walk(term, defs, name, seen):
            if isinstance(node, (ExtChoice, IntChoice, Sliding)):
                shared = (channels(node.left, defs, strict=False)
                          & channels(node.right, defs, strict=False))
                if shared:
                    findings.append(Finding(
                        "channels", "choice arguments share channel(s) "
                        + ", ".join(sorted(shared)), where))
                for side, sub in (("left", node.left), ("right", node.right)):
                    if _initial_t_conditional(sub, defs):
                        findings.append(Finding(
                            "cond-before-prefix",
                            f"conditional choice on t before a prefix in the "
                            f"{side} argument of a choice", where))
    verdict = "fail" if findings else "pass"
    return ConditionReport("SeqNorm", verdict, findings)


# ---------------------------------------------------------------------------
# Type symmetry (syntactic sufficient condition)

def check_typesym_syntactic(proc: ProcRef, defs: Definitions) -> ConditionReport:
    """Sufficient syntactic condition for full symmetry in t: no t constants
    and no selections from proper subsets of t (alphabets of an indexed
    parallel composition are exempt from the selection restriction)."""
    term, name, seen = _root(proc, defs)
    findings = []
    for node, where in _walk(term, defs, name, seen):
        for v in _t_constants(node, include_alphabets=True):
            findings.append(Finding("i", f"constant {v} of type t", where))
        for desc in _nonwhole_t_selections(node):
            findings.append(Finding(
                "iv", f"selection {desc} from a set involving t", where))
        if isinstance(node, (ReplInterleave, ReplExtChoice, ReplAlphaPar)) \
                and not isinstance(node.domain, TType):
            findings.append(Finding(
                "iv", "replicated operator indexed over a proper subset of t", where))
    verdict = "fail" if findings else "pass"
    return ConditionReport("TypeSym-syntactic", verdict, findings)


# ---------------------------------------------------------------------------
# Mixed inputs (the stable-failures threshold hypothesis)

def check_no_mixed_inputs(proc: ProcRef, defs: Definitions) -> ConditionReport:
    """No construct combines a nondeterministic selection over t with a
    deterministic input of any type."""
    term, name, seen = _root(proc, defs)
    findings = []
    for node, where in _walk(term, defs, name, seen):
        if isinstance(node, Prefix):
            sets = classify_fields(node.construct)
            if sets.dollar_t and sets.query:
                findings.append(Finding(
                    "mixed", "construct on channel "
                    f"{node.construct.channel!r} combines a nondeterministic "
                    "selection over t with a deterministic input", where))
    verdict = "fail" if findings else "pass"
    return ConditionReport("no-mixed-inputs", verdict, findings)


# ---------------------------------------------------------------------------
# Equality-test condition (sampled)

@dataclass
class _ScopedConditional:
    node: If
    scope: dict
    where: str


def _scoped_conditionals(term: ProcessTerm, defs: Definitions, scope: dict,
                         where: str, seen: set) -> Iterator[_ScopedConditional]:
    if isinstance(term, Prefix):
        inner = dict(scope)
        for f in term.construct.fields:
            if f.sel in (DOLLAR, QUERY):
                if f.is_t():
                    inner[f.payload] = "t"
                elif isinstance(f.ty, NamedType):
                    inner[f.payload] = f.ty.name
                else:
                    inner[f.payload] = None
        yield from _scoped_conditionals(term.cont, defs, inner, where, seen)
    elif isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
        yield from _scoped_conditionals(term.left, defs, scope, where, seen)
        yield from _scoped_conditionals(term.right, defs, scope, where, seen)
    elif isinstance(term, If):
        if isinstance(term.guard, (Condition, MixedGuard)):
            yield _ScopedConditional(term, dict(scope), where)
        yield from _scoped_conditionals(term.then, defs, scope, where, seen)
        yield from _scoped_conditionals(term.els, defs, scope, where, seen)
    elif isinstance(term, (Hide, Rename)):
        yield from _scoped_conditionals(term.proc, defs, scope, where, seen)
    elif isinstance(term, (AlphaPar, SharedPar)):
        yield from _scoped_conditionals(term.left, defs, scope, where, seen)
        yield from _scoped_conditionals(term.right, defs, scope, where, seen)
    elif isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
        inner = dict(scope)
        inner[term.var] = "t"
        yield from _scoped_conditionals(term.body, defs, inner, where, seen)
    elif isinstance(term, Ident):
        eq = defs.equations.get(term.name)
        if eq is not None and term.name not in seen:
            seen.add(term.name)
            inner = {p: t for p, t in zip(eq.params, eq.param_types)}
            yield from _scoped_conditionals(eq.body, defs, inner, term.name, seen)


def revposconjeqt_evidence(proc: ProcRef, defs: Definitions, model: str,
                           sizes=(2, 3), max_states: int = 50_000) -> ConditionReport:
    """Reversed positive-conjunction-of-equality-tests condition.

    The syntactic half requires every conditional choice on t to test a
    positive conjunction of equalities.  The semantic half (the negative
    branch is refined by the positive branch, for all values of the free
    variables) is undecidable in general, so it is sampled at the requested
    instantiation sizes; the verdict is therefore at most 'evidence'.
    """
    from .analysis import refines_failures, refines_traces
    from .std_semantics import build_lts

    term, name, seen0 = _root(proc, defs)
    rep_name = f"RevPosConjEqT-{'T' if model == 'traces' else 'F'}"
    seq = check_seq(proc, defs)
    if not seq.ok():
        return ConditionReport(rep_name, "fail", [Finding(
            "pre", "process is not in the Seq fragment", name)])
    findings = []
    conditionals = list(_scoped_conditionals(term, defs, {}, name, set(seen0)))
    if not conditionals:
        return ConditionReport(rep_name, "evidence", [],
                               ["no conditional choices on t: holds vacuously"])
    check = refines_traces if model == "traces" else refines_failures
    checked = 0
    for sc in conditionals:
        guard = sc.node.guard
        if isinstance(guard, MixedGuard):
            findings.append(Finding("syntactic", "guard mixes t with other types",
                                    sc.where))
            continue
        if guard.negated:
            findings.append(Finding(
                "syntactic", "condition is not a positive conjunction of "
                "equality tests", sc.where))
            continue
        fv = sorted((free_vars(sc.node.then) | free_vars(sc.node.els)
                     | {s for a in guard.atoms for s in a if isinstance(s, str)}))
        domains = []
        enumerable = True
        for v in fv:
            ty = sc.scope.get(v)
            if ty == "t":
                domains.append(("t", v))
            elif ty in defs.datatypes:
                domains.append(("data", v))
            else:
                findings.append(Finding(
                    "semantic", f"cannot enumerate values of variable {v!r}",
                    sc.where))
                enumerable = False
        if not enumerable:
            continue
        for n in sizes:
            tvals = [TVal(i) for i in range(n)]
            spaces = []
            for kind, v in domains:
                if kind == "t":
                    spaces.append([(v, tv) for tv in tvals])
                else:
                    spaces.append([(v, a) for a in defs.datatypes[sc.scope[v]]])
            for assignment in itertools.product(*spaces):
                binding = dict(assignment)
                then_p = substitute(sc.node.then, binding)
                els_p = substitute(sc.node.els, binding)
                lhs = build_lts(defs, els_p, n, max_states)
                rhs = build_lts(defs, then_p, n, max_states)
                verdict = check(lhs, rhs)
                checked += 1
                if not verdict.holds:
                    pretty = ", ".join(f"{k}={v}" for k, v in sorted(binding.items()))
                    findings.append(Finding(
                        "semantic", "negative branch is not refined by the "
                        f"positive branch at #T={n} under [{pretty}]", sc.where))
                    return ConditionReport(rep_name, "fail", findings)
    if findings:
        return ConditionReport(rep_name, "fail", findings)
    sizes_str = ",".join(str(n) for n in sizes)
    return ConditionReport(
        rep_name, "evidence", [],
        [f"branch refinements verified for all valuations at sizes {{{sizes_str}}} "
         f"({checked} checks); the property itself is undecidable"])


def check_all(proc: ProcRef, defs: Definitions) -> list[ConditionReport]:
    """The syntactic checker battery for one process."""
    return [
        check_data_independence(proc, defs),
        check_seq(proc, defs),
        check_seqnorm(proc, defs),
        check_typesym_syntactic(proc, defs),
        check_no_mixed_inputs(proc, defs),
    ]
