"""Abstract syntax for the CSP subset, and the construct field algebra.

Values of the distinguished type t are naturals 0..#T-1; all other data
belongs to finite enumerations declared in the source file.  A prefix
construct ``c S1 x1:X1 ... Sk xk:Xk`` carries one selector per field:
``$`` (nondeterministic selection), ``?`` (deterministic input) or ``!``
(output).  The six index-set functions, the selector replacement function
and capture-avoiding substitution defined here are the ground layer that
every semantics consumes.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import SemanticsError

# structural equality/canonicalisation recurse over whole terms
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))

# ---------------------------------------------------------------------------
# Values and types

DOLLAR = "$"
QUERY = "?"
BANG = "!"


@dataclass(frozen=True, order=True)
class TVal:
    """A value of the distinguished type: an index into T = {0..#T-1}."""

    index: int

    def __str__(self) -> str:
        return str(self.index)


@dataclass(frozen=True, order=True)
class Atom:
    """A member of a declared finite non-t type; ordinal is its declaration rank."""

    type_name: str
    name: str
    ordinal: int

    def __str__(self) -> str:
        return self.name


Value = Union[TVal, Atom]


def value_key(v: Value):
    """Total order on values: t-values ascending, then atoms in declaration order."""
    if isinstance(v, TVal):
        return (0, v.index, "")
    return (1, v.ordinal, v.type_name)


@dataclass(frozen=True)
class TType:
    """The distinguished type parameter t."""

    def __str__(self) -> str:
        return "t"


@dataclass(frozen=True)
class NamedType:
    """A declared finite enumeration, e.g. ``datatype X = a | b``."""

    name: str
    values: tuple[Atom, ...] = field(compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class SetType:
    """A literal set annotation ``{d1, d2}``; members are values or variables,
    homogeneous in t-ness."""

    items: tuple[Union[str, Value], ...]
    is_t: bool

    def __str__(self) -> str:
        return "{" + ",".join(str(i) for i in self.items) + "}"


@dataclass(frozen=True)
class DiffType:
    """The annotation ``t \\ {d1, ...}``: the whole of t minus listed members."""

    excluded: tuple[Union[str, Value], ...]

    def __str__(self) -> str:
        return "(t\\{" + ",".join(str(i) for i in self.excluded) + "})"


TypeExpr = Union[TType, NamedType, SetType, DiffType]

T_TYPE = TType()


def type_is_t(ty: TypeExpr) -> bool:
    """Whether an annotation ranges over (a subset of) the distinguished type."""
    if isinstance(ty, (TType, DiffType)):
        return True
    if isinstance(ty, SetType):
        return ty.is_t
    return False


# ---------------------------------------------------------------------------
# Constructs

@dataclass(frozen=True)
class Field:
    """One field of a prefix construct.

    For ``$``/``?`` the payload is the input variable and ty its annotation;
    for ``!`` the payload is a variable or value, ty is None (null) and
    bang_is_t records whether the payload is of type t.
    """

    sel: str
    payload: Union[str, Value]
    ty: Optional[TypeExpr] = None
    bang_is_t: bool = False

    def __post_init__(self):
        if self.sel in (DOLLAR, QUERY):
            assert isinstance(self.payload, str) and self.ty is not None
        else:
            assert self.sel == BANG and self.ty is None

    def is_t(self) -> bool:
        if self.sel == BANG:
            return self.bang_is_t
        return type_is_t(self.ty)


@dataclass(frozen=True)
class Construct:
    """A prefix communication c S1 x1:X1 ... Sk xk:Xk.

    uid identifies the construct's place in the source syntax; it survives
    substitution and selector replacement but does not take part in term
    equality.
    """

    channel: str
    fields: tuple[Field, ...] = ()
    uid: int = field(default=-1, compare=False, hash=False)

    def arity(self) -> int:
        return len(self.fields)


@dataclass(frozen=True)
class IndexSets:
    """The six index-set functions of a construct, 1-based positions."""

    dollar_t: frozenset[int]
    dollar_nont: frozenset[int]
    query_t: frozenset[int]
    query_nont: frozenset[int]
    bang_t: frozenset[int]
    bang_nont: frozenset[int]

    @property
    def dollar(self) -> frozenset[int]:
        return self.dollar_t | self.dollar_nont

    @property
    def query(self) -> frozenset[int]:
        return self.query_t | self.query_nont

    @property
    def bang(self) -> frozenset[int]:
        return self.bang_t | self.bang_nont


def classify_fields(alpha: Construct) -> IndexSets:
    """Partition {1..k} by selector and t-ness of each field."""
    buckets = {key: set() for key in
               ("$t", "$n", "?t", "?n", "!t", "!n")}
    for pos, f in enumerate(alpha.fields, start=1):
        key = f.sel if f.sel != BANG else "!"
        if f.sel == DOLLAR:
            buckets["$t" if f.is_t() else "$n"].add(pos)
        elif f.sel == QUERY:
            buckets["?t" if f.is_t() else "?n"].add(pos)
        else:
            buckets["!t" if f.is_t() else "!n"].add(pos)
    return IndexSets(
        frozenset(buckets["$t"]), frozenset(buckets["$n"]),
        frozenset(buckets["?t"]), frozenset(buckets["?n"]),
        frozenset(buckets["!t"]), frozenset(buckets["!n"]),
    )


def replace_selections(alpha: Construct, scope: str) -> Construct:
    """Turn $-fields in scope ('t', 'non-t' or 'both') into !-fields with null
    annotation; all other fields are unchanged."""
    if scope not in ("t", "non-t", "both"):
        raise ValueError(f"bad scope {scope!r}")
    out = []
    for f in alpha.fields:
        if f.sel == DOLLAR and (
            scope == "both"
            or (scope == "t" and f.is_t())
            or (scope == "non-t" and not f.is_t())
        ):
            out.append(Field(BANG, f.payload, None, bang_is_t=f.is_t()))
        else:
            out.append(f)
    return Construct(alpha.channel, tuple(out), uid=alpha.uid)


# ---------------------------------------------------------------------------
# Guards

TTerm = Union[str, TVal]  # a side of a t-equality atom


@dataclass(frozen=True)
class Condition:
    """A conjunction of equality atoms over t-typed terms, or its negation."""

    negated: bool
    atoms: tuple[tuple[TTerm, TTerm], ...]

    def __post_init__(self):
        assert self.atoms

    def negate(self) -> "Condition":
        return Condition(not self.negated, self.atoms)

    def closed(self) -> bool:
        return all(isinstance(s, TVal) for a in self.atoms for s in a)


# Non-t boolean expressions: naturals with +, -, min, and non-t value equality.

@dataclass(frozen=True)
class NatLit:
    value: int


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class NatOp:
    op: str  # '+' or '-'
    left: "ScalarExpr"
    right: "ScalarExpr"


@dataclass(frozen=True)
class NatMin:
    left: "ScalarExpr"
    right: "ScalarExpr"


ScalarExpr = Union[NatLit, VarRef, NatOp, NatMin, Atom, TVal]


@dataclass(frozen=True)
class Cmp:
    op: str  # '==', '!=', '<', '<=', '>', '>='
    left: ScalarExpr
    right: ScalarExpr


@dataclass(frozen=True)
class BoolNot:
    arg: "BoolExpr"


@dataclass(frozen=True)
class BoolAnd:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class BoolOr:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class BoolLit:
    value: bool


BoolExpr = Union[Cmp, BoolNot, BoolAnd, BoolOr, BoolLit]


@dataclass(frozen=True)
class MixedGuard:
    """A conjunction mixing t-equality atoms and non-t atoms.  Not usable by
    the symbolic semantics; flagged by the Seq checker."""

    negated: bool
    t_atoms: tuple[tuple[TTerm, TTerm], ...]
    other: tuple[BoolExpr, ...]


Guard = Union[Condition, BoolExpr, MixedGuard]


def eval_scalar(e: ScalarExpr):
    if isinstance(e, NatLit):
        return e.value
    if isinstance(e, (Atom, TVal)):
        return e
    if isinstance(e, VarRef):
        raise SemanticsError(f"unbound variable {e.name!r} in guard or argument")
    if isinstance(e, NatOp):
        a, b = eval_scalar(e.left), eval_scalar(e.right)
        if not (isinstance(a, int) and isinstance(b, int)):
            raise SemanticsError("arithmetic on non-natural operands")
        return a + b if e.op == "+" else max(a - b, 0)
    if isinstance(e, NatMin):
        return min(eval_scalar(e.left), eval_scalar(e.right))
    raise SemanticsError(f"cannot evaluate {e!r}")


def eval_bool(b: BoolExpr) -> bool:
    if isinstance(b, BoolLit):
        return b.value
    if isinstance(b, BoolNot):
        return not eval_bool(b.arg)
    if isinstance(b, BoolAnd):
        return eval_bool(b.left) and eval_bool(b.right)
    if isinstance(b, BoolOr):
        return eval_bool(b.left) or eval_bool(b.right)
    if isinstance(b, Cmp):
        lv, rv = eval_scalar(b.left), eval_scalar(b.right)
        if b.op == "==":
            return lv == rv
        if b.op == "!=":
            return lv != rv
        if not (isinstance(lv, int) and isinstance(rv, int)):
            raise SemanticsError("ordering comparison on non-natural operands")
        return {"<": lv < rv, "<=": lv <= rv, ">": lv > rv, ">=": lv >= rv}[b.op]
    raise SemanticsError(f"cannot evaluate {b!r}")


def eval_condition_closed(cond: Condition) -> bool:
    """Evaluate a t-condition all of whose atom sides are values."""
    if not cond.closed():
        raise SemanticsError("t-condition with unbound variables reached evaluation")
    result = all(l == r for l, r in cond.atoms)
    return (not result) if cond.negated else result


# ---------------------------------------------------------------------------
# Process terms

Arg = Union[Value, ScalarExpr]


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Prefix:
    construct: Construct
    cont: "ProcessTerm"


@dataclass(frozen=True)
class ExtChoice:
    left: "ProcessTerm"
    right: "ProcessTerm"


@dataclass(frozen=True)
class IntChoice:
    left: "ProcessTerm"
    right: "ProcessTerm"


@dataclass(frozen=True)
class Sliding:
    left: "ProcessTerm"
    right: "ProcessTerm"


@dataclass(frozen=True)
class If:
    guard: Guard
    then: "ProcessTerm"
    els: "ProcessTerm"


# --- event-set descriptors (hiding, parallel alphabets) --------------------

@dataclass(frozen=True)
class ChanPrefixItem:
    """``{| c.d1...dm |}`` item: all events of channel c extending the datums."""

    channel: str
    datums: tuple[Union[str, Value], ...] = ()


@dataclass(frozen=True)
class EventLitItem:
    """A complete event literal ``c.d1...dk`` inside an explicit set."""

    channel: str
    datums: tuple[Union[str, Value], ...]


@dataclass(frozen=True)
class EventSet:
    closures: tuple[ChanPrefixItem, ...] = ()
    literals: tuple[EventLitItem, ...] = ()


@dataclass(frozen=True)
class Hide:
    proc: "ProcessTerm"
    hidden: EventSet


@dataclass(frozen=True)
class Rename:
    proc: "ProcessTerm"
    pairs: tuple[tuple[Union[str, EventLitItem], Union[str, EventLitItem]], ...]


@dataclass(frozen=True)
class AlphaPar:
    left: "ProcessTerm"
    left_alpha: EventSet
    right: "ProcessTerm"
    right_alpha: EventSet


@dataclass(frozen=True)
class SharedPar:
    left: "ProcessTerm"
    shared: EventSet
    right: "ProcessTerm"


@dataclass(frozen=True)
class Interleave:
    left: "ProcessTerm"
    right: "ProcessTerm"


# Replicated operators whose index set depends on t stay primitive and are
# expanded when the instantiation is known; non-t index sets are desugared
# to binary operators at parse time.

@dataclass(frozen=True)
class ReplAlphaPar:
    var: str
    domain: TypeExpr
    alpha: EventSet
    body: "ProcessTerm"


@dataclass(frozen=True)
class ReplInterleave:
    var: str
    domain: TypeExpr
    body: "ProcessTerm"


@dataclass(frozen=True)
class ReplIntChoice:
    var: str
    domain: TypeExpr
    body: "ProcessTerm"


@dataclass(frozen=True)
class ReplExtChoice:
    var: str
    domain: TypeExpr
    body: "ProcessTerm"


@dataclass(frozen=True)
class Ident:
    name: str
    args: tuple[Arg, ...] = ()


ProcessTerm = Union[
    Stop, Prefix, ExtChoice, IntChoice, Sliding, If, Hide, Rename,
    AlphaPar, SharedPar, Interleave,
    ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice, Ident,
]

BINARY_CHOICES = (ExtChoice, IntChoice, Sliding)


# ---------------------------------------------------------------------------
# Definitions

@dataclass
class Equation:
    name: str
    params: tuple[str, ...]
    body: ProcessTerm
    # inferred parameter types: 't', 'nat', a datatype name, or None (unused)
    param_types: tuple[Optional[str], ...] = ()


@dataclass(frozen=True)
class Assertion:
    lhs: str
    model: str  # 'traces' | 'failures'
    rhs: str


@dataclass
class Definitions:
    """The global environment: channel signatures, non-t types, constants and
    process equations."""

    channels: dict[str, tuple[TypeExpr, ...]] = field(default_factory=dict)
    datatypes: dict[str, tuple[Atom, ...]] = field(default_factory=dict)
    consts: dict[str, int] = field(default_factory=dict)
    equations: dict[str, Equation] = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)
    filename: str = "<input>"

    def body(self, name: str) -> ProcessTerm:
        eq = self.equations.get(name)
        if eq is None:
            raise SemanticsError(f"undefined process {name!r}")
        if eq.params:
            raise SemanticsError(f"process {name!r} expects {len(eq.params)} argument(s)")
        return eq.body


# ---------------------------------------------------------------------------
# Substitution, free variables, alpha canonicalisation

SubstValue = Union[Value, int]


def _subst_datum(d, mapping):
    if isinstance(d, str) and d in mapping:
        v = mapping[d]
        if isinstance(v, int):
            raise SemanticsError(f"natural value substituted into event field {d!r}")
        return v
    return d


def _subst_scalar(e: ScalarExpr, mapping) -> ScalarExpr:
    if isinstance(e, VarRef):
        if e.name in mapping:
            v = mapping[e.name]
            if isinstance(v, int):
                return NatLit(v)
            return v
        return e
    if isinstance(e, NatOp):
        return NatOp(e.op, _subst_scalar(e.left, mapping), _subst_scalar(e.right, mapping))
    if isinstance(e, NatMin):
        return NatMin(_subst_scalar(e.left, mapping), _subst_scalar(e.right, mapping))
    return e


def _subst_bool(b: BoolExpr, mapping) -> BoolExpr:
    if isinstance(b, Cmp):
        return Cmp(b.op, _subst_scalar(b.left, mapping), _subst_scalar(b.right, mapping))
    if isinstance(b, BoolNot):
        return BoolNot(_subst_bool(b.arg, mapping))
    if isinstance(b, BoolAnd):
        return BoolAnd(_subst_bool(b.left, mapping), _subst_bool(b.right, mapping))
    if isinstance(b, BoolOr):
        return BoolOr(_subst_bool(b.left, mapping), _subst_bool(b.right, mapping))
    return b


def _subst_tterm(s: TTerm, mapping) -> TTerm:
    if isinstance(s, str) and s in mapping:
        v = mapping[s]
        if not isinstance(v, TVal):
            raise SemanticsError(f"non-t value substituted for t-variable {s!r}")
        return v
    return s


def _subst_guard(g: Guard, mapping) -> Guard:
    if isinstance(g, Condition):
        return Condition(g.negated, tuple(
            (_subst_tterm(l, mapping), _subst_tterm(r, mapping)) for l, r in g.atoms))
    if isinstance(g, MixedGuard):
        return MixedGuard(
            g.negated,
            tuple((_subst_tterm(l, mapping), _subst_tterm(r, mapping)) for l, r in g.t_atoms),
            tuple(_subst_bool(b, mapping) for b in g.other),
        )
    return _subst_bool(g, mapping)


def _subst_type(ty, mapping):
    if isinstance(ty, SetType):
        return SetType(tuple(_subst_datum(i, mapping) for i in ty.items), ty.is_t)
    if isinstance(ty, DiffType):
        return DiffType(tuple(_subst_datum(i, mapping) for i in ty.excluded))
    return ty


def subst_construct(alpha: Construct, mapping) -> Construct:
    out = []
    bound = set()
    for f in alpha.fields:
        if f.sel in (DOLLAR, QUERY):
            ty = _subst_type(f.ty, {k: v for k, v in mapping.items() if k not in bound})
            out.append(Field(f.sel, f.payload, ty, f.bang_is_t))
            bound.add(f.payload)
        else:
            live = {k: v for k, v in mapping.items() if k not in bound}
            out.append(Field(BANG, _subst_datum(f.payload, live), None, f.bang_is_t))
    return Construct(alpha.channel, tuple(out), uid=alpha.uid)


def _subst_evset(s: EventSet, mapping) -> EventSet:
    return EventSet(
        tuple(ChanPrefixItem(c.channel, tuple(_subst_datum(d, mapping) for d in c.datums))
              for c in s.closures),
        tuple(EventLitItem(e.channel, tuple(_subst_datum(d, mapping) for d in e.datums))
              for e in s.literals),
    )


def substitute(term: ProcessTerm, mapping: dict[str, SubstValue]) -> ProcessTerm:
    """Capture-avoiding substitution of values for free variables.

    Mapped values are concrete (t-values, atoms, or naturals for process
    parameters), so no renaming of binders is ever needed; binders simply
    shadow entries of the mapping.
    """
    if not mapping:
        return term
    if isinstance(term, Stop):
        return term
    if isinstance(term, Prefix):
        a = term.construct
        binders = {f.payload for f in a.fields if f.sel in (DOLLAR, QUERY)}
        inner = {k: v for k, v in mapping.items() if k not in binders}
        return Prefix(subst_construct(a, mapping), substitute(term.cont, inner))
    if isinstance(term, ExtChoice):
        return ExtChoice(substitute(term.left, mapping), substitute(term.right, mapping))
    if isinstance(term, IntChoice):
        return IntChoice(substitute(term.left, mapping), substitute(term.right, mapping))
    if isinstance(term, Sliding):
        return Sliding(substitute(term.left, mapping), substitute(term.right, mapping))
    if isinstance(term, If):
        return If(_subst_guard(term.guard, mapping),
                  substitute(term.then, mapping), substitute(term.els, mapping))
    if isinstance(term, Hide):
        return Hide(substitute(term.proc, mapping), _subst_evset(term.hidden, mapping))
    if isinstance(term, Rename):
        return Rename(substitute(term.proc, mapping), term.pairs)
    if isinstance(term, AlphaPar):
        return AlphaPar(substitute(term.left, mapping), _subst_evset(term.left_alpha, mapping),
                        substitute(term.right, mapping), _subst_evset(term.right_alpha, mapping))
    if isinstance(term, SharedPar):
        return SharedPar(substitute(term.left, mapping), _subst_evset(term.shared, mapping),
                         substitute(term.right, mapping))
    if isinstance(term, Interleave):
        return Interleave(substitute(term.left, mapping), substitute(term.right, mapping))
    if isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
        inner = {k: v for k, v in mapping.items() if k != term.var}
        domain = _subst_type(term.domain, mapping)
        if isinstance(term, ReplAlphaPar):
            return ReplAlphaPar(term.var, domain, _subst_evset(term.alpha, inner),
                                substitute(term.body, inner))
        return type(term)(term.var, domain, substitute(term.body, inner))
    if isinstance(term, Ident):
        out = []
        for a in term.args:
            if isinstance(a, (TVal, Atom)):
                out.append(a)
            else:
                out.append(_subst_scalar(a, mapping))
        return Ident(term.name, tuple(out))
    raise SemanticsError(f"substitute: unknown term {term!r}")


def _free_in_scalar(e: ScalarExpr) -> frozenset[str]:
    if isinstance(e, VarRef):
        return frozenset((e.name,))
    if isinstance(e, NatOp):
        return _free_in_scalar(e.left) | _free_in_scalar(e.right)
    if isinstance(e, NatMin):
        return _free_in_scalar(e.left) | _free_in_scalar(e.right)
    return frozenset()


def _free_in_bool(b: BoolExpr) -> frozenset[str]:
    if isinstance(b, Cmp):
        return _free_in_scalar(b.left) | _free_in_scalar(b.right)
    if isinstance(b, BoolNot):
        return _free_in_bool(b.arg)
    if isinstance(b, (BoolAnd, BoolOr)):
        return _free_in_bool(b.left) | _free_in_bool(b.right)
    return frozenset()


def _free_in_guard(g: Guard) -> frozenset[str]:
    if isinstance(g, Condition):
        return frozenset(s for a in g.atoms for s in a if isinstance(s, str))
    if isinstance(g, MixedGuard):
        out = frozenset(s for a in g.t_atoms for s in a if isinstance(s, str))
        for b in g.other:
            out |= _free_in_bool(b)
        return out
    return _free_in_bool(g)


def _free_in_datums(datums) -> frozenset[str]:
    return frozenset(d for d in datums if isinstance(d, str))


def _free_in_evset(s: EventSet) -> frozenset[str]:
    out = frozenset()
    for c in s.closures:
        out |= _free_in_datums(c.datums)
    for e in s.literals:
        out |= _free_in_datums(e.datums)
    return out


def _free_in_type(ty) -> frozenset[str]:
    if isinstance(ty, SetType):
        return _free_in_datums(ty.items)
    if isinstance(ty, DiffType):
        return _free_in_datums(ty.excluded)
    return frozenset()


def free_vars(term: ProcessTerm) -> frozenset[str]:
    """Free variables of a process term (input binders scope over the
    continuation; replicated binders scope over their body)."""
    if isinstance(term, Stop):
        return frozenset()
    if isinstance(term, Prefix):
        out = set()
        bound = set()
        for f in term.construct.fields:
            if f.sel in (DOLLAR, QUERY):
                out |= _free_in_type(f.ty) - bound
                bound.add(f.payload)
            elif isinstance(f.payload, str) and f.payload not in bound:
                out.add(f.payload)
        return frozenset(out) | (free_vars(term.cont) - bound)
    if isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
        return free_vars(term.left) | free_vars(term.right)
    if isinstance(term, If):
        return _free_in_guard(term.guard) | free_vars(term.then) | free_vars(term.els)
    if isinstance(term, Hide):
        return free_vars(term.proc) | _free_in_evset(term.hidden)
    if isinstance(term, Rename):
        return free_vars(term.proc)
    if isinstance(term, AlphaPar):
        return (free_vars(term.left) | free_vars(term.right)
                | _free_in_evset(term.left_alpha) | _free_in_evset(term.right_alpha))
    if isinstance(term, SharedPar):
        return free_vars(term.left) | free_vars(term.right) | _free_in_evset(term.shared)
    if isinstance(term, ReplAlphaPar):
        inner = (free_vars(term.body) | _free_in_evset(term.alpha)) - {term.var}
        return inner | _free_in_type(term.domain)
    if isinstance(term, (ReplInterleave, ReplIntChoice, ReplExtChoice)):
        return (free_vars(term.body) - {term.var}) | _free_in_type(term.domain)
    if isinstance(term, Ident):
        out = frozenset()
        for a in term.args:
            if not isinstance(a, (TVal, Atom)):
                out |= _free_in_scalar(a)
        return out
    raise SemanticsError(f"free_vars: unknown term {term!r}")


class _Renamer:
    """Sequential bound-variable renamer; traversal order is deterministic, so
    alpha-equivalent terms canonicalise to equal terms."""

    def __init__(self):
        self.counter = itertools.count()

    def fresh(self) -> str:
        return f"_b{next(self.counter)}"


def _canon_datum(d, env):
    if isinstance(d, str):
        return env.get(d, d)
    return d


def _canon_scalar(e, env):
    if isinstance(e, VarRef):
        return VarRef(env.get(e.name, e.name))
    if isinstance(e, NatOp):
        return NatOp(e.op, _canon_scalar(e.left, env), _canon_scalar(e.right, env))
    if isinstance(e, NatMin):
        return NatMin(_canon_scalar(e.left, env), _canon_scalar(e.right, env))
    return e


def _canon_bool(b, env):
    if isinstance(b, Cmp):
        return Cmp(b.op, _canon_scalar(b.left, env), _canon_scalar(b.right, env))
    if isinstance(b, BoolNot):
        return BoolNot(_canon_bool(b.arg, env))
    if isinstance(b, BoolAnd):
        return BoolAnd(_canon_bool(b.left, env), _canon_bool(b.right, env))
    if isinstance(b, BoolOr):
        return BoolOr(_canon_bool(b.left, env), _canon_bool(b.right, env))
    return b


def _canon_guard(g, env):
    if isinstance(g, Condition):
        return Condition(g.negated, tuple(
            (_canon_datum(l, env), _canon_datum(r, env)) for l, r in g.atoms))
    if isinstance(g, MixedGuard):
        return MixedGuard(
            g.negated,
            tuple((_canon_datum(l, env), _canon_datum(r, env)) for l, r in g.t_atoms),
            tuple(_canon_bool(b, env) for b in g.other))
    return _canon_bool(g, env)


def _canon_type(ty, env):
    if isinstance(ty, SetType):
        return SetType(tuple(_canon_datum(i, env) for i in ty.items), ty.is_t)
    if isinstance(ty, DiffType):
        return DiffType(tuple(_canon_datum(i, env) for i in ty.excluded))
    return ty


def _canon_evset(s, env):
    return EventSet(
        tuple(ChanPrefixItem(c.channel, tuple(_canon_datum(d, env) for d in c.datums))
              for c in s.closures),
        tuple(EventLitItem(e.channel, tuple(_canon_datum(d, env) for d in e.datums))
              for e in s.literals))


def _canon(term, env, ren: _Renamer):
    if isinstance(term, Stop):
        return term
    if isinstance(term, Prefix):
        fields = []
        env2 = dict(env)
        for f in term.construct.fields:
            if f.sel in (DOLLAR, QUERY):
                ty = _canon_type(f.ty, env2)
                new = ren.fresh()
                env2[f.payload] = new
                fields.append(Field(f.sel, new, ty, f.bang_is_t))
            else:
                fields.append(Field(BANG, _canon_datum(f.payload, env2), None, f.bang_is_t))
        alpha = Construct(term.construct.channel, tuple(fields), uid=term.construct.uid)
        return Prefix(alpha, _canon(term.cont, env2, ren))
    if isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
        return type(term)(_canon(term.left, env, ren), _canon(term.right, env, ren))
    if isinstance(term, If):
        return If(_canon_guard(term.guard, env),
                  _canon(term.then, env, ren), _canon(term.els, env, ren))
    if isinstance(term, Hide):
        return Hide(_canon(term.proc, env, ren), _canon_evset(term.hidden, env))
    if isinstance(term, Rename):
        return Rename(_canon(term.proc, env, ren), term.pairs)
    if isinstance(term, AlphaPar):
        return AlphaPar(_canon(term.left, env, ren), _canon_evset(term.left_alpha, env),
                        _canon(term.right, env, ren), _canon_evset(term.right_alpha, env))
    if isinstance(term, SharedPar):
        return SharedPar(_canon(term.left, env, ren), _canon_evset(term.shared, env),
                         _canon(term.right, env, ren))
    if isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
        domain = _canon_type(term.domain, env)
        env2 = dict(env)
        new = ren.fresh()
        env2[term.var] = new
        if isinstance(term, ReplAlphaPar):
            return ReplAlphaPar(new, domain, _canon_evset(term.alpha, env2),
                                _canon(term.body, env2, ren))
        return type(term)(new, domain, _canon(term.body, env2, ren))
    if isinstance(term, Ident):
        return Ident(term.name, tuple(
            a if isinstance(a, (TVal, Atom)) else _canon_scalar(a, env)
            for a in term.args))
    raise SemanticsError(f"alpha_canonical: unknown term {term!r}")


def alpha_canonical(term: ProcessTerm) -> ProcessTerm:
    """Rename bound variables by a deterministic scheme, so that two terms are
    alpha-equivalent iff their canonical forms are equal.  Free variables are
    kept by name.  Idempotent."""
    return _canon(term, {}, _Renamer())


# ---------------------------------------------------------------------------
# Channels (initial-construct channel names of the sequential fragment)

def channels(term: ProcessTerm, defs: Definitions, *, strict: bool = True,
             _active: Optional[set] = None) -> frozenset[str]:
    """Channel names of the initial constructs of a sequential process.

    Identifier unfolding carries a visited set; revisiting an identifier on
    the current unfolding path contributes no new channels, and with
    strict=True such an unguarded recursive cycle raises a diagnostic.
    """
    active = _active if _active is not None else set()
    if isinstance(term, Stop):
        return frozenset()
    if isinstance(term, Prefix):
        return frozenset((term.construct.channel,))
    if isinstance(term, (ExtChoice, IntChoice, Sliding)):
        return (channels(term.left, defs, strict=strict, _active=active)
                | channels(term.right, defs, strict=strict, _active=active))
    if isinstance(term, If):
        return (channels(term.then, defs, strict=strict, _active=active)
                | channels(term.els, defs, strict=strict, _active=active))
    if isinstance(term, Ident):
        if term.name in active:
            if strict:
                raise SemanticsError(
                    f"unguarded recursive cycle through identifier {term.name!r}")
            return frozenset()
        eq = defs.equations.get(term.name)
        if eq is None:
            raise SemanticsError(f"undefined process {term.name!r}")
        active.add(term.name)
        try:
            return channels(eq.body, defs, strict=strict, _active=active)
        finally:
            active.discard(term.name)
    raise SemanticsError(
        f"channels() is defined on the sequential fragment only, got {type(term).__name__}")


# ---------------------------------------------------------------------------
# Comms: concrete and semi-symbolic event enumeration

def domain_values(ty: TypeExpr, tvalues: tuple[TVal, ...]):
    """Concrete members of an annotation, in canonical order."""
    if isinstance(ty, TType):
        return list(tvalues)
    if isinstance(ty, NamedType):
        return list(ty.values)
    if isinstance(ty, SetType):
        out = []
        for item in ty.items:
            if isinstance(item, str):
                raise SemanticsError(f"unbound variable {item!r} in set annotation")
            out.append(item)
        seen = set()
        uniq = [v for v in out if not (v in seen or seen.add(v))]
        if ty.is_t:
            for v in uniq:
                if isinstance(v, TVal) and v.index >= len(tvalues):
                    raise SemanticsError(
                        f"t-value {v.index} outside the instantiation of size {len(tvalues)}")
        return sorted(uniq, key=value_key)
    if isinstance(ty, DiffType):
        excl = set()
        for item in ty.excluded:
            if isinstance(item, str):
                raise SemanticsError(f"unbound variable {item!r} in set annotation")
            excl.add(item)
        return [v for v in tvalues if v not in excl]
    raise SemanticsError(f"bad annotation {ty!r}")


def comms(alpha: Construct, tvalues: tuple[TVal, ...]) -> list[tuple[Value, ...]]:
    """Value tuples of the concrete events a $-free construct describes.

    Fields enumerate left-to-right with values ascending; input bindings are
    visible to the fields to their right, so an output field may repeat an
    earlier input of the same communication."""
    sets = classify_fields(alpha)
    if sets.dollar:
        raise SemanticsError("comms applied to a construct with nondeterministic selections")

    def extend(prefixes, idx):
        if idx == len(alpha.fields):
            return [vs for vs, _ in prefixes]
        f = alpha.fields[idx]
        out = []
        for vs, binding in prefixes:
            if f.sel == QUERY:
                ty = _subst_type(f.ty, binding)
                for v in domain_values(ty, tvalues):
                    out.append((vs + (v,), {**binding, f.payload: v}))
            else:
                v = f.payload
                if isinstance(v, str):
                    v = binding.get(v)
                    if v is None:
                        raise SemanticsError(
                            f"unbound output variable {f.payload!r}")
                    if isinstance(v, TVal) != f.bang_is_t:
                        raise SemanticsError(
                            f"output variable {f.payload!r} bound to a value "
                            "of the wrong type within one construct")
                if isinstance(v, TVal) and v.index >= len(tvalues):
                    raise SemanticsError(
                        f"t-value {v.index} outside the instantiation of "
                        f"size {len(tvalues)}")
                out.append((vs + (v,), binding))
        return extend(out, idx + 1)

    return extend([((), {})], 0)


def comms_nont(alpha: Construct) -> list[Construct]:
    """Visible symbolic events of a construct with no non-t nondeterministic
    selections: non-t deterministic inputs are resolved to outputs (visible
    to the non-t fields to their right), the parts involving t stay
    symbolic."""
    sets = classify_fields(alpha)
    if sets.dollar_nont:
        raise SemanticsError(
            "comms_nont applied to a construct with non-t nondeterministic selections")

    def extend(prefixes, idx):
        if idx == len(alpha.fields):
            return [fs for fs, _ in prefixes]
        f = alpha.fields[idx]
        out = []
        for fs, binding in prefixes:
            if f.sel == QUERY and not f.is_t():
                for v in domain_values(_subst_type(f.ty, binding), ()):
                    out.append((fs + (Field(BANG, v, None, bang_is_t=False),),
                                {**binding, f.payload: v}))
            elif (f.sel == BANG and not f.bang_is_t
                  and isinstance(f.payload, str) and f.payload in binding):
                out.append((fs + (Field(BANG, binding[f.payload], None, False),),
                            binding))
            else:
                out.append((fs + (f,), binding))
        return extend(out, idx + 1)

    return [Construct(alpha.channel, tuple(fs), uid=alpha.uid)
            for fs in extend([((), {})], 0)]


def construct_binding(alpha: Construct, values: tuple[Value, ...],
                      positions) -> dict[str, Value]:
    """Binding of input variables at the given 1-based positions to values."""
    return {alpha.fields[i - 1].payload: values[i - 1] for i in sorted(positions)}


def iter_constructs(term: ProcessTerm, defs: Optional[Definitions] = None,
                    *, _seen: Optional[set] = None) -> Iterator[Construct]:
    """All prefix constructs within a term, unfolding identifiers at most once."""
    seen = _seen if _seen is not None else set()
    if isinstance(term, Prefix):
        yield term.construct
        yield from iter_constructs(term.cont, defs, _seen=seen)
    elif isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
        yield from iter_constructs(term.left, defs, _seen=seen)
        yield from iter_constructs(term.right, defs, _seen=seen)
    elif isinstance(term, If):
        yield from iter_constructs(term.then, defs, _seen=seen)
        yield from iter_constructs(term.els, defs, _seen=seen)
    elif isinstance(term, (Hide, Rename)):
        yield from iter_constructs(term.proc, defs, _seen=seen)
    elif isinstance(term, (AlphaPar, SharedPar)):
        yield from iter_constructs(term.left, defs, _seen=seen)
        yield from iter_constructs(term.right, defs, _seen=seen)
    elif isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
        yield from iter_constructs(term.body, defs, _seen=seen)
    elif isinstance(term, Ident) and defs is not None:
        if term.name not in seen and term.name in defs.equations:
            seen.add(term.name)
            yield from iter_constructs(defs.equations[term.name].body, defs, _seen=seen)
