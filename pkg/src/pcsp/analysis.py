"""Denotational extraction and decision procedures over finite LTSs:
traces, stable failures, refinement in both models, strong bisimulation
with distinguishing formulas, divergence-freedom, and the sampled semantic
symmetry check."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import SemanticsError
from .lts import Event, Lts, TAU, label_key, rename_lts
from .report import ConditionReport, Finding
from .syntax import TVal


# ---------------------------------------------------------------------------
# Traces and failures

def traces_upto(lts: Lts, depth: int) -> set[tuple[Event, ...]]:
    """All visible traces of length <= depth (finite, by bounded search)."""
    out = {()}
    frontier = {(): lts.tau_closure(lts.root)}
    for _ in range(depth):
        nxt = {}
        for tr, closure in frontier.items():
            for s in closure:
                for lab, tgt, _ in lts.edges[s]:
                    if lab is TAU:
                        continue
                    tr2 = tr + (lab,)
                    if tr2 not in nxt:
                        nxt[tr2] = set()
                    nxt[tr2].add(tgt)
        frontier = {tr: lts.tau_closure(ss) for tr, ss in nxt.items()}
        out.update(frontier.keys())
    return out


def states_after(lts: Lts, trace) -> frozenset[int]:
    """τ-closed set of states reachable by the given visible trace."""
    current = lts.tau_closure(lts.root)
    for e in trace:
        nxt = {tgt for s in current for lab, tgt, _ in lts.edges[s] if lab == e}
        if not nxt:
            return frozenset()
        current = lts.tau_closure(nxt)
    return current


def has_trace(lts: Lts, trace) -> bool:
    return bool(states_after(lts, trace)) or not trace


def initials_after(lts: Lts, trace) -> frozenset[Event]:
    """Events available immediately after the trace."""
    out = set()
    for s in states_after(lts, trace):
        out |= lts.initials(s)
    return frozenset(out)


def acceptances_after(lts: Lts, trace) -> frozenset[frozenset[Event]]:
    """Initial sets of the stable states reachable after the trace."""
    return frozenset(lts.initials(s) for s in states_after(lts, trace)
                     if lts.is_stable(s))


def has_failure(lts: Lts, trace, refused) -> bool:
    """(trace, refused) is a stable failure: some stable state after the
    trace accepts nothing in the refused set."""
    refused = frozenset(refused)
    return any(not (acc & refused) for acc in acceptances_after(lts, trace))


def divergence_free(lts: Lts) -> bool:
    """No τ-cycle is reachable from the root (the whole graph is reachable
    by construction)."""
    color = [0] * lts.n_states()  # 0 new, 1 on stack, 2 done

    for start in range(lts.n_states()):
        if color[start]:
            continue
        stack = [(start, iter(lts.edges[start]))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for lab, tgt, _ in it:
                if lab is not TAU:
                    continue
                if color[tgt] == 1:
                    return False
                if color[tgt] == 0:
                    color[tgt] = 1
                    stack.append((tgt, iter(lts.edges[tgt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return True


# ---------------------------------------------------------------------------
# Normalisation (τ-closure subset construction with acceptance sets)

@dataclass
class NormalisedSpec:
    """Deterministic automaton over visible events obtained by τ-closure
    subset construction, annotated per node with its minimal acceptance sets
    and a divergence flag."""

    nodes: list[frozenset[int]]
    trans: list[dict[Event, int]]
    acceptances: list[tuple[frozenset[Event], ...]]
    divergent: list[bool]
    root: int = 0


def _minimal_sets(sets) -> tuple[frozenset, ...]:
    uniq = sorted(set(sets), key=lambda s: (len(s), sorted(map(label_key, s))))
    out = []
    for s in uniq:
        if not any(t < s for t in out):
            out.append(s)
    return tuple(out)


def _divergent_states(lts: Lts) -> set[int]:
    """States lying on or reaching a τ-cycle via τ steps."""
    n = lts.n_states()
    index = {}
    low = {}
    on_stack = set()
    stack = []
    counter = itertools.count()
    in_cycle = set()

    for root in range(n):
        if root in index:
            continue
        work = [(root, iter(lts.edges[root]))]
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for lab, tgt, _ in it:
                if lab is not TAU:
                    continue
                if tgt not in index:
                    index[tgt] = low[tgt] = next(counter)
                    stack.append(tgt)
                    on_stack.add(tgt)
                    work.append((tgt, iter(lts.edges[tgt])))
                    advanced = True
                    break
                if tgt in on_stack:
                    low[node] = min(low[node], index[tgt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    s = stack.pop()
                    on_stack.discard(s)
                    scc.append(s)
                    if s == node:
                        break
                has_tau_cycle = len(scc) > 1 or any(
                    lab is TAU and tgt == node
                    for lab, tgt, _ in lts.edges[node])
                if has_tau_cycle:
                    in_cycle.update(scc)
    # propagate backwards over τ edges
    diverging = set(in_cycle)
    changed = True
    while changed:
        changed = False
        for s in range(n):
            if s in diverging:
                continue
            if any(lab is TAU and tgt in diverging for lab, tgt, _ in lts.edges[s]):
                diverging.add(s)
                changed = True
    return diverging


def normalise(lts: Lts, *, forbid_divergence: bool = False) -> NormalisedSpec:
    diverging = _divergent_states(lts)
    root = lts.tau_closure(lts.root)
    nodes = [root]
    index = {root: 0}
    trans: list[dict[Event, int]] = []
    acceptances = []
    divergent = []
    frontier = 0
    while frontier < len(nodes):
        node = nodes[frontier]
        div = any(s in diverging for s in node)
        if div and forbid_divergence:
            raise SemanticsError(
                "specification diverges: stable-failures normalisation "
                "requires divergence-freedom")
        divergent.append(div)
        acceptances.append(_minimal_sets(
            lts.initials(s) for s in node if lts.is_stable(s)))
        succ: dict[Event, set[int]] = {}
        for s in node:
            for lab, tgt, _ in lts.edges[s]:
                if lab is TAU:
                    continue
                succ.setdefault(lab, set()).add(tgt)
        row = {}
        for lab in sorted(succ, key=label_key):
            closed = lts.tau_closure(succ[lab])
            tgt = index.get(closed)
            if tgt is None:
                tgt = len(nodes)
                index[closed] = tgt
                nodes.append(closed)
            row[lab] = tgt
        trans.append(row)
        frontier += 1
    return NormalisedSpec(nodes, trans, acceptances, divergent)


# ---------------------------------------------------------------------------
# Refinement

@dataclass
class Verdict:
    holds: bool
    kind: str = ""  # 'trace' | 'refusal' when not holds
    trace: tuple = ()
    refusal: Optional[frozenset[Event]] = None

    def counterexample_str(self) -> str:
        if self.holds:
            return ""
        tr = "<" + ", ".join(str(e) for e in self.trace) + ">"
        if self.kind == "refusal":
            ref = "{" + ", ".join(
                str(e) for e in sorted(self.refusal, key=label_key)) + "}"
            return f"({tr}, {ref})"
        return tr

    def to_dict(self) -> dict:
        out = {"holds": self.holds}
        if not self.holds:
            out["kind"] = self.kind
            out["trace"] = [str(e) for e in self.trace]
            if self.refusal is not None:
                out["refusal"] = sorted(str(e) for e in self.refusal)
        return out


def _product_bfs(spec: Lts, impl: Lts, on_node: Callable) -> Optional[Verdict]:
    """Breadth-first exploration of norm(spec) x impl, expanding edges in
    label order so reported counterexamples are shortest and deterministic.

    on_node(nnode, impl_state, trace) may return a Verdict to stop early;
    trace reconstruction uses parent pointers.
    """
    norm = on_node.norm
    start = (norm.root, impl.root)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        nnode, istate = queue.popleft()
        trace = None  # computed lazily

        def get_trace():
            path = []
            cur = (nnode, istate)
            while parent[cur] is not None:
                cur, lab = parent[cur]
                if lab is not TAU:
                    path.append(lab)
            return tuple(reversed(path))

        stop = on_node(nnode, istate, get_trace)
        if stop is not None:
            return stop
        for lab, tgt, _ in impl.edges[istate]:
            if lab is TAU:
                nxt = (nnode, tgt)
            else:
                row = norm.trans[nnode]
                if lab not in row:
                    tr = get_trace() + (lab,)
                    return Verdict(False, "trace", tr)
                nxt = (row[lab], tgt)
            if nxt not in parent:
                parent[nxt] = ((nnode, istate), lab)
                queue.append(nxt)
    return None


def refines_traces(spec: Lts, impl: Lts) -> Verdict:
    """spec ⊑ impl in the traces model: every trace of impl is one of spec."""
    norm = normalise(spec)

    def on_node(nnode, istate, get_trace):
        return None

    on_node.norm = norm
    bad = _product_bfs(spec, impl, on_node)
    return bad if bad is not None else Verdict(True)


def refines_failures(spec: Lts, impl: Lts) -> Verdict:
    """spec ⊑ impl in the stable failures model: trace containment plus
    domination of every stable implementation state's refusal."""
    norm = normalise(spec, forbid_divergence=True)
    sigma = spec.alphabet | impl.alphabet

    def on_node(nnode, istate, get_trace):
        if not impl.is_stable(istate):
            return None
        initials = impl.initials(istate)
        for acc in norm.acceptances[nnode]:
            if acc <= initials:
                return None
        return Verdict(False, "refusal", get_trace(), frozenset(sigma - initials))

    on_node.norm = norm
    bad = _product_bfs(spec, impl, on_node)
    return bad if bad is not None else Verdict(True)


def refines(spec: Lts, impl: Lts, model: str) -> Verdict:
    if model == "traces":
        return refines_traces(spec, impl)
    if model == "failures":
        return refines_failures(spec, impl)
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Strong bisimulation (partition refinement, with distinguishing formulas)

def strong_bisim(l1: Lts, l2: Lts) -> tuple[bool, Optional[str]]:
    """Partition refinement over the disjoint union, treating τ as an
    ordinary label.  On failure, returns a distinguishing
    Hennessy-Milner-style observation built from the refinement history."""
    n1 = l1.n_states()
    n = n1 + l2.n_states()

    edges = []
    for s in range(l1.n_states()):
        edges.append([(lab, tgt) for lab, tgt, _ in l1.edges[s]])
    for s in range(l2.n_states()):
        edges.append([(lab, tgt + n1) for lab, tgt, _ in l2.edges[s]])

    block = [0] * n
    history = [list(block)]
    while True:
        sigs = {}
        for s in range(n):
            sig = frozenset((label_key(lab), block[tgt]) for lab, tgt in edges[s])
            sigs[s] = (block[s], sig)
        renumber = {}
        new_block = [0] * n
        for s in range(n):
            key = sigs[s]
            if key not in renumber:
                renumber[key] = len(renumber)
            new_block[s] = renumber[key]
        if new_block == block:
            break
        block = new_block
        history.append(list(block))

    r1, r2 = l1.root, l2.root + n1
    if block[r1] == block[r2]:
        return True, None

    labels_by_key = {}
    for s in range(n):
        for lab, _ in edges[s]:
            labels_by_key.setdefault(label_key(lab), lab)

    def first_diff_level(a, b):
        for lvl, blocks in enumerate(history):
            if blocks[a] != blocks[b]:
                return lvl
        return None

    def succs(s, lab_key):
        return [tgt for lab, tgt in edges[s] if label_key(lab) == lab_key]

    def dist(a, b, depth=0):
        if depth > len(history) + 4:
            return "..."
        lvl = first_diff_level(a, b)
        prev = history[lvl - 1]
        siga = frozenset((label_key(lab), prev[tgt]) for lab, tgt in edges[a])
        sigb = frozenset((label_key(lab), prev[tgt]) for lab, tgt in edges[b])
        only_a = sorted(siga - sigb)
        only_b = sorted(sigb - siga)
        if only_a:
            lab_key, blk = only_a[0]
            lab = labels_by_key[lab_key]
            a2 = min(t for t in succs(a, lab_key) if prev[t] == blk)
            parts = sorted({dist(a2, t2, depth + 1) for t2 in succs(b, lab_key)})
            inner = " and ".join(parts) if parts else "true"
            return f"<{'tau' if lab is TAU else lab}>({inner})"
        lab_key, blk = only_b[0]
        lab = labels_by_key[lab_key]
        b2 = min(t for t in succs(b, lab_key) if prev[t] == blk)
        parts = sorted({dist(b2, t2, depth + 1) for t2 in succs(a, lab_key)})
        inner = " and ".join(parts) if parts else "true"
        return f"not <{'tau' if lab is TAU else lab}>({inner})"

    return False, dist(r1, r2)


# ---------------------------------------------------------------------------
# Semantic type-symmetry spot check

def permutations_of(n: int):
    return itertools.permutations(range(n))


def perm_event_fn(perm) -> Callable[[Event], Event]:
    def fn(e: Event) -> Event:
        return Event(e.channel, tuple(
            TVal(perm[v.index]) if isinstance(v, TVal) else v for v in e.values))
    return fn


def permutation_bisim_check(defs, proc, sizes, max_states: int = 50_000) -> ConditionReport:
    """Sampled check of full symmetry in t: for each requested size and each
    bijection of the instantiation, the process must be strongly bisimilar to
    its renaming under the bijection."""
    from .std_semantics import build_lts

    findings = []
    total = 0
    for n in sizes:
        lts = build_lts(defs, proc, n, max_states)
        for perm in permutations_of(n):
            total += 1
            renamed = rename_lts(lts, perm_event_fn(perm))
            ok, formula = strong_bisim(lts, renamed)
            if not ok:
                pi = ", ".join(f"{i}->{perm[i]}" for i in range(n))
                findings.append(Finding(
                    "bisim", f"not bisimilar to its renaming under {{{pi}}} at "
                    f"#T={n}; distinguished by {formula}",
                    proc if isinstance(proc, str) else "<term>"))
    if findings:
        return ConditionReport("TypeSym-semantic", "fail", findings)
    sizes_str = ",".join(str(n) for n in sizes)
    return ConditionReport(
        "TypeSym-semantic", "evidence", [],
        [f"bisimilar to all {total} bijective renamings at sizes {{{sizes_str}}}"])
