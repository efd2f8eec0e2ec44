"""Concrete Operational Semantics with Environments.

Instantiates a symbolic transition system at a concrete type: states are
configurations (symbolic state, environment, instantiation).  A visible
symbolic event with nondeterministic selections over t first resolves them
by a τ that records the chosen values in the environment and rewrites the
selections of the originating construct into outputs; symbolic τs carry
over; conditional edges dissolve, contributing the transitions of their
target when the condition holds in the environment.  Also implements the
ternary relation linking symbolic traces, environments and concrete traces.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .errors import SemanticsError
from .lts import Event, Lts, TAU, build
from .pretty import fmt_term
from .ssos import Cond, Sslts, Vis
from .ssos import successors as sym_successors
from .std_semantics import eval_guard, file_alphabet, tvalues_for
from .syntax import (
    Condition, Construct, Definitions, DOLLAR, ExtChoice, If, MixedGuard,
    Prefix, ProcessTerm, QUERY, Sliding, alpha_canonical, classify_fields,
    domain_values, free_vars, replace_selections, substitute,
)

Environment = dict  # variable name -> TVal


def restrict_env(env: Environment, term: ProcessTerm) -> tuple:
    """Environment minimality: keep only the free variables of the state,
    as a sorted tuple usable in hashable configurations."""
    fv = free_vars(term)
    return tuple(sorted((k, v) for k, v in env.items() if k in fv))


@dataclass(frozen=True)
class Configuration:
    """(symbolic state, environment) at a fixed instantiation; two
    configurations are identical iff substituting the environments yields
    alpha-equivalent terms."""

    term: ProcessTerm
    env: tuple  # sorted (name, TVal) pairs

    def env_dict(self) -> Environment:
        return dict(self.env)

    def describe(self) -> str:
        items = ", ".join(f"{k}->{v}" for k, v in self.env)
        return f"({fmt_term(self.term)}, {{{items}}})"


def config_key(cfg: Configuration):
    return alpha_canonical(substitute(cfg.term, cfg.env_dict()))


def eval_condition(cond: Condition, env: Environment) -> bool:
    vals = []
    for l, r in cond.atoms:
        lv = env.get(l, l) if isinstance(l, str) else l
        rv = env.get(r, r) if isinstance(r, str) else r
        if isinstance(lv, str) or isinstance(rv, str):
            raise SemanticsError(
                f"condition variable {lv if isinstance(lv, str) else rv!r} "
                "is not bound by the environment")
        vals.append(lv == rv)
    result = all(vals)
    return (not result) if cond.negated else result


# ---------------------------------------------------------------------------
# The per-construct selection-to-output state transformation

def replace_t_initials(term: ProcessTerm, uid: int) -> ProcessTerm:
    """Rewrite the t-selections of the construct with the given source
    identity into outputs, wherever that construct occurs as an initial
    (pre-τ) communication of the state."""
    if isinstance(term, Prefix):
        if term.construct.uid == uid:
            return Prefix(replace_selections(term.construct, "t"), term.cont)
        return term
    if isinstance(term, ExtChoice):
        return ExtChoice(replace_t_initials(term.left, uid),
                         replace_t_initials(term.right, uid))
    if isinstance(term, Sliding):
        return Sliding(replace_t_initials(term.left, uid), term.right)
    if isinstance(term, If):
        if isinstance(term.guard, (Condition, MixedGuard)):
            return term
        branch_then = eval_guard(term.guard)
        if branch_then:
            return If(term.guard, replace_t_initials(term.then, uid), term.els)
        return If(term.guard, term.then, replace_t_initials(term.els, uid))
    return term


# ---------------------------------------------------------------------------
# Instantiation of symbolic events

def insts(eps: Construct, env: Environment, tvalues) -> list[Event]:
    """All concrete events instantiating the symbolic event consistently with
    the environment: inputs and selections of type t range over the
    instantiation, outputs take their environment values."""
    choices = []
    for f in eps.fields:
        if f.sel in (DOLLAR, QUERY):
            choices.append(list(domain_values(f.ty, tvalues)))
        else:
            if isinstance(f.payload, str):
                v = env.get(f.payload)
                if v is None:
                    return []
                choices.append([v])
            else:
                choices.append([f.payload])
    return [Event(eps.channel, vs) for vs in itertools.product(*choices)]


def match(eps: Construct, event: Event) -> Environment:
    """The environment extension caused by instantiating the symbolic event
    with the concrete event: bindings for its t inputs and selections."""
    if event.channel != eps.channel or len(event.values) != len(eps.fields):
        raise SemanticsError(f"event {event} does not fit symbolic event shape")
    out = {}
    for f, v in zip(eps.fields, event.values):
        if f.sel in (DOLLAR, QUERY) and f.is_t():
            out[f.payload] = v
    return out


# ---------------------------------------------------------------------------
# Translation rules

def successors_of_config(cfg: Configuration, defs: Definitions, tvalues):
    """COSE transitions of a configuration.  Conditional symbolic edges whose
    condition holds contribute the transitions of their target (so a false
    condition contributes nothing); chains of conditionals are followed with
    a cycle guard."""
    env = cfg.env_dict()
    out = []
    seen_terms = set()

    def expand(term: ProcessTerm):
        key = alpha_canonical(term)
        if key in seen_terms:
            return
        seen_terms.add(key)
        for lab, uid, target in sym_successors(term, defs):
            if lab is TAU:
                nxt = Configuration(target, restrict_env(env, target))
                out.append((TAU, uid, nxt))
            elif isinstance(lab, Cond):
                if eval_condition(lab.condition, env):
                    expand(target)
            else:
                eps = lab.event
                sets = classify_fields(eps)
                if sets.dollar_t:
                    positions = sorted(sets.dollar_t)
                    domains = [domain_values(eps.fields[i - 1].ty, tvalues)
                               for i in positions]
                    transformed = replace_t_initials(term, eps.uid)
                    for vs in itertools.product(*domains):
                        env2 = dict(env)
                        for i, v in zip(positions, vs):
                            env2[eps.fields[i - 1].payload] = v
                        nxt = Configuration(transformed,
                                            restrict_env(env2, transformed))
                        out.append((TAU, eps.uid, nxt))
                else:
                    for event in insts(eps, env, tvalues):
                        env2 = dict(env)
                        env2.update(match(eps, event))
                        nxt = Configuration(target, restrict_env(env2, target))
                        out.append((event, eps.uid, nxt))

    expand(cfg.term)
    return out


def concretize(defs: Definitions, source: Union[Sslts, str, ProcessTerm],
               tsize: int, init_env: Optional[Environment] = None,
               max_states: int = 100_000) -> Lts:
    """The LTS of configurations rooted at (root state, initial environment),
    per the translation rules."""
    if isinstance(source, Sslts):
        root_term = source.states[source.root]
    elif isinstance(source, str):
        root_term = defs.body(source)
    else:
        root_term = source
    tvalues = tvalues_for(tsize)
    env = dict(init_env) if init_env else {}
    root = Configuration(root_term, restrict_env(env, root_term))

    def successors(cfg: Configuration):
        for lab, uid, nxt in successors_of_config(cfg, defs, tvalues):
            yield lab, uid, nxt, config_key(nxt)

    return build(root, config_key(root), successors,
                 alphabet=file_alphabet(defs, tvalues), tsize=tsize,
                 max_states=max_states, describe=Configuration.describe)


# ---------------------------------------------------------------------------
# Symbolic traces generating concrete traces

def generates(sigma, env: Environment, trace, tvalues) -> bool:
    """The least ternary relation: τ labels are skipped, a conditional label
    requires its condition to hold, and a visible symbolic label consumes one
    concrete event it instantiates, extending the environment."""
    if not sigma:
        return not trace
    head, rest = sigma[0], sigma[1:]
    if head is TAU:
        return generates(rest, env, trace, tvalues)
    if isinstance(head, Cond):
        return (eval_condition(head.condition, env)
                and generates(rest, env, trace, tvalues))
    eps = head.event if isinstance(head, Vis) else head
    if not trace:
        return False
    event = trace[0]
    if event not in insts(eps, env, tvalues):
        return False
    env2 = dict(env)
    env2.update(match(eps, event))
    return generates(rest, env2, trace[1:], tvalues)


def generated_traces(sigma, env: Environment, tvalues) -> Iterator[tuple]:
    """All concrete traces the symbolic trace generates under the given
    initial environment."""
    if not sigma:
        yield ()
        return
    head, rest = sigma[0], sigma[1:]
    if head is TAU:
        yield from generated_traces(rest, env, tvalues)
        return
    if isinstance(head, Cond):
        if eval_condition(head.condition, env):
            yield from generated_traces(rest, env, tvalues)
        return
    eps = head.event if isinstance(head, Vis) else head
    for event in insts(eps, env, tvalues):
        env2 = dict(env)
        env2.update(match(eps, event))
        for tail in generated_traces(rest, env2, tvalues):
            yield (event,) + tail


# ---------------------------------------------------------------------------
# Regularity validators (assertions that hold for SeqNorm specifications)

def check_environment_uniqueness(lts: Lts) -> list[str]:
    """After any visible trace not ending in τ, exactly one configuration is
    reachable (checked over the determinisation of the configuration LTS,
    whose macro-states each correspond to at least one trace)."""
    problems = []
    seen = {frozenset((lts.root,))}
    queue = [frozenset((lts.root,))]
    while queue:
        macro = queue.pop()
        if len(macro) != 1:
            names = ", ".join(str(s) for s in sorted(macro))
            problems.append(f"configurations {{{names}}} reachable by one trace")
            continue
        closure = lts.tau_closure(macro)
        succ: dict = {}
        for s in closure:
            for lab, tgt, _ in lts.edges[s]:
                if lab is TAU:
                    continue
                succ.setdefault(lab, set()).add(tgt)
        for lab, tgts in succ.items():
            nxt = frozenset(tgts)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return problems


def check_unique_matching_construct(lts: Lts) -> list[str]:
    """Each (trace, event) pair is produced by a unique construct, checked by
    comparing the source identities on same-labelled edges reachable after a
    common trace."""
    problems = []
    seen = {frozenset((lts.root,))}
    queue = [frozenset((lts.root,))]
    while queue:
        macro = queue.pop()
        closure = lts.tau_closure(macro)
        succ: dict = {}
        uids: dict = {}
        for s in closure:
            for lab, tgt, uid in lts.edges[s]:
                if lab is TAU:
                    continue
                succ.setdefault(lab, set()).add(tgt)
                uids.setdefault(lab, set()).add(uid)
        for lab, us in uids.items():
            if len(us) > 1:
                problems.append(f"event {lab} arises from {len(us)} constructs "
                                "after a common trace")
        for lab, tgts in succ.items():
            nxt = frozenset(tgts)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return problems


def check_monotonicity(small: Lts, large: Lts) -> list[str]:
    """Every transition available at a sub-instantiation is available at the
    larger one, with matching source and target configurations (matching via
    the type-independent configuration keys)."""
    problems = []
    for idx, key in enumerate(small.keys):
        big = large.key_index.get(key)
        if big is None:
            problems.append(f"configuration {small.states[idx].describe()} "
                            "unreachable at the larger instantiation")
            continue
        small_edges = {(TAU if lab is TAU else lab, small.keys[tgt])
                       for lab, tgt, _ in small.edges[idx]}
        large_edges = {(TAU if lab is TAU else lab, large.keys[tgt])
                       for lab, tgt, _ in large.edges[big]}
        missing = small_edges - large_edges
        for lab, _ in sorted(missing, key=lambda e: str(e[0])):
            problems.append(f"transition {lab} from "
                            f"{small.states[idx].describe()} missing at the "
                            "larger instantiation")
    return problems
