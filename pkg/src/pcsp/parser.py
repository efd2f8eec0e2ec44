"""Text front end for ``.pcsp`` definition files.

Declarations (``channel``, ``datatype``, ``const``) are collected in a first
pass so that equation bodies can be parsed against channel signatures
regardless of declaration order.  Process parameters are untyped in the
source; a small inference pass types them from their uses (event positions,
arithmetic, argument passing) before guards are classified into t-conditions
and ordinary boolean expressions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import Diagnostic, ParseError
from .syntax import (
    Atom, BANG, BoolAnd, BoolLit, BoolNot, BoolOr, ChanPrefixItem, Cmp,
    Condition, Construct, Definitions, DiffType, DOLLAR, Equation,
    EventLitItem, EventSet, ExtChoice, Field, Hide, Ident, If, IntChoice,
    Interleave, MixedGuard, NamedType, NatLit, NatMin, NatOp, Prefix, QUERY,
    Rename, ReplAlphaPar, ReplExtChoice, ReplIntChoice, ReplInterleave,
    AlphaPar, SetType, SharedPar, Sliding, Stop, T_TYPE, TType, TVal,
    Assertion, VarRef, substitute, free_vars,
)

KEYWORDS = {
    "channel", "datatype", "const", "assert", "if", "then", "else",
    "and", "or", "not", "min", "STOP", "true", "false",
}

# longest-match symbol table
_SYMBOLS = [
    "|~|", "|||", "[T=", "[F=",
    "->", "[]", "[>", "[[", "]]", "{|", "|}", "[|", "|]", "<-",
    "==", "!=", "<=", ">=", "||",
    "(", ")", "{", "}", "[", "]", "|", ".", ",", ":", ";",
    "!", "?", "$", "&", "\\", "@", "<", ">", "=", "+", "-",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'num', 'sym', 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str, filename: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("num", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise ParseError([Diagnostic(f"unexpected character {c!r}", line, col, filename)])
    toks.append(Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, tokens: list[Token], defs: Definitions, filename: str):
        self.toks = tokens
        self.pos = 0
        self.defs = defs
        self.filename = filename
        self._uid = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_sym(self, *texts: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text in texts

    def at_kw(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text in words

    def eat_sym(self, text: str) -> Token:
        t = self.peek()
        if t.kind != "sym" or t.text != text:
            self.fail(f"expected {text!r}, found {t.text or 'end of input'!r}", t)
        return self.next()

    def eat_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected {what}, found {t.text or 'end of input'!r}", t)
        return self.next()

    def fail(self, message: str, tok: Token | None = None):
        t = tok or self.peek()
        raise ParseError([Diagnostic(message, t.line, t.col, self.filename)])

    def fresh_uid(self) -> int:
        self._uid += 1
        return self._uid

    # -- datums and types ----------------------------------------------------

    def lookup_atom(self, name: str) -> Atom | None:
        for values in self.defs.datatypes.values():
            for a in values:
                if a.name == name:
                    return a
        return None

    def parse_datum(self, expected_ty, tok: Token):
        """A value or variable occupying a field of the given signature type."""
        if tok.kind == "num":
            if isinstance(expected_ty, TType):
                return TVal(int(tok.text))
            self.fail(f"numeric literal {tok.text} in a non-t field", tok)
        if tok.kind != "ident":
            self.fail(f"expected a value or variable, found {tok.text!r}", tok)
        atom = self.lookup_atom(tok.text)
        if atom is not None:
            if isinstance(expected_ty, NamedType) and atom.type_name != expected_ty.name:
                self.fail(f"value {tok.text!r} is of type {atom.type_name}, "
                          f"not {expected_ty.name}", tok)
            if isinstance(expected_ty, TType):
                self.fail(f"value {tok.text!r} of type {atom.type_name} in a t field", tok)
            return atom
        return tok.text  # a variable

    def parse_type_expr(self, sig_ty=None):
        """A field annotation: t, a datatype name, {items} or (t\\{items})."""
        if self.at_sym("("):
            self.eat_sym("(")
            ty = self.parse_type_expr(sig_ty)
            self.eat_sym(")")
            return ty
        if self.at_sym("{"):
            open_tok = self.eat_sym("{")
            items = []
            if not self.at_sym("}"):
                while True:
                    items.append(self.parse_datum(sig_ty if sig_ty is not None else T_TYPE,
                                                  self.next()))
                    if not self.at_sym(","):
                        break
                    self.eat_sym(",")
            self.eat_sym("}")
            if not items:
                self.fail("empty set annotation", open_tok)
            is_t = sig_ty is None or isinstance(sig_ty, TType)
            return SetType(tuple(items), is_t)
        tok = self.eat_ident("type")
        if tok.text == "t":
            if self.at_sym("\\"):
                self.eat_sym("\\")
                self.eat_sym("{")
                items = []
                while True:
                    items.append(self.parse_datum(T_TYPE, self.next()))
                    if not self.at_sym(","):
                        break
                    self.eat_sym(",")
                self.eat_sym("}")
                return DiffType(tuple(items))
            return T_TYPE
        if tok.text in self.defs.datatypes:
            return NamedType(tok.text, self.defs.datatypes[tok.text])
        self.fail(f"unknown type {tok.text!r}", tok)

    # -- constructs ----------------------------------------------------------

    def parse_construct(self, chan_tok: Token) -> Construct:
        name = chan_tok.text
        sig = self.defs.channels[name]
        fields = []
        while self.at_sym("$", "?", "!", "."):
            pos = len(fields)
            if pos >= len(sig):
                self.fail(f"channel {name!r} takes {len(sig)} field(s)", self.peek())
            sig_ty = sig[pos]
            sel_tok = self.next()
            if sel_tok.text in ("$", "?"):
                var = self.eat_ident("input variable")
                if self.at_sym(":"):
                    self.eat_sym(":")
                    ty = self.parse_type_expr(sig_ty)
                else:
                    ty = sig_ty
                if self._type_class(ty) != self._type_class(sig_ty):
                    self.fail(f"annotation {ty} does not match field type {sig_ty} "
                              f"of channel {name!r}", sel_tok)
                fields.append(Field(sel_tok.text, var.text, ty))
            else:
                d = self.parse_datum(sig_ty, self.next())
                fields.append(Field(BANG, d, None, bang_is_t=isinstance(sig_ty, TType)))
        if len(fields) != len(sig):
            self.fail(f"channel {name!r} takes {len(sig)} field(s), "
                      f"got {len(fields)}", chan_tok)
        return Construct(name, tuple(fields), uid=self.fresh_uid())

    @staticmethod
    def _type_class(ty):
        if isinstance(ty, (TType, DiffType)):
            return "t"
        if isinstance(ty, SetType):
            return "t" if ty.is_t else "non-t"
        return "non-t"

    # -- scalar and boolean expressions ---------------------------------------

    def parse_scalar(self):
        left = self.parse_scalar_term()
        while self.at_sym("+", "-"):
            op = self.next().text
            right = self.parse_scalar_term()
            left = NatOp(op, left, right)
        return left

    def parse_scalar_term(self):
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return NatLit(int(tok.text))
        if self.at_kw("min"):
            self.next()
            self.eat_sym("(")
            a = self.parse_scalar()
            self.eat_sym(",")
            b = self.parse_scalar()
            self.eat_sym(")")
            return NatMin(a, b)
        if self.at_sym("("):
            self.eat_sym("(")
            e = self.parse_scalar()
            self.eat_sym(")")
            return e
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            atom = self.lookup_atom(tok.text)
            if atom is not None:
                return atom
            if tok.text in self.defs.consts:
                return NatLit(self.defs.consts[tok.text])
            return VarRef(tok.text)
        self.fail(f"expected a value, variable or number, found {tok.text!r}", tok)

    CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")

    def parse_bool(self):
        left = self.parse_bool_and()
        while self.at_kw("or"):
            self.next()
            left = BoolOr(left, self.parse_bool_and())
        return left

    def parse_bool_and(self):
        left = self.parse_bool_atom()
        while self.at_kw("and"):
            self.next()
            left = BoolAnd(left, self.parse_bool_atom())
        return left

    def parse_bool_atom(self):
        if self.at_kw("not"):
            self.next()
            return BoolNot(self.parse_bool_atom())
        if self.at_kw("true"):
            self.next()
            return BoolLit(True)
        if self.at_kw("false"):
            self.next()
            return BoolLit(False)
        mark = self.pos
        try:
            left = self.parse_scalar()
            if not self.at_sym(*self.CMP_OPS):
                self.fail("expected comparison operator")
            op = self.next().text
            right = self.parse_scalar()
            return Cmp(op, left, right)
        except ParseError:
            self.pos = mark
        self.eat_sym("(")
        b = self.parse_bool()
        self.eat_sym(")")
        return b

    # -- event sets ------------------------------------------------------------

    def parse_event_fields(self, chan_tok: Token, complete: bool):
        name = chan_tok.text
        if name not in self.defs.channels:
            self.fail(f"undeclared channel {name!r}", chan_tok)
        sig = self.defs.channels[name]
        datums = []
        while self.at_sym("."):
            if len(datums) >= len(sig):
                self.fail(f"channel {name!r} takes {len(sig)} field(s)", self.peek())
            self.eat_sym(".")
            datums.append(self.parse_datum(sig[len(datums)], self.next()))
        if complete and len(datums) != len(sig):
            self.fail(f"event on channel {name!r} needs {len(sig)} field(s), "
                      f"got {len(datums)}", chan_tok)
        return name, tuple(datums)

    def parse_evset(self) -> EventSet:
        if self.at_sym("{|"):
            self.eat_sym("{|")
            closures = []
            while True:
                chan_tok = self.eat_ident("channel name")
                name, datums = self.parse_event_fields(chan_tok, complete=False)
                closures.append(ChanPrefixItem(name, datums))
                if not self.at_sym(","):
                    break
                self.eat_sym(",")
            self.eat_sym("|}")
            return EventSet(closures=tuple(closures))
        self.eat_sym("{")
        literals = []
        if not self.at_sym("}"):
            while True:
                chan_tok = self.eat_ident("channel name")
                name, datums = self.parse_event_fields(chan_tok, complete=True)
                literals.append(EventLitItem(name, datums))
                if not self.at_sym(","):
                    break
                self.eat_sym(",")
        self.eat_sym("}")
        return EventSet(literals=tuple(literals))

    # -- processes ---------------------------------------------------------

    # precedence: hide < parallel < |~| < [] < [> < & < ->

    def parse_proc(self):
        return self.parse_hide()

    def parse_hide(self):
        p = self.parse_par()
        while self.at_sym("\\"):
            self.eat_sym("\\")
            p = Hide(p, self.parse_evset())
        return p

    def parse_par(self):
        p = self.parse_int()
        while True:
            if self.at_sym("|||"):
                self.next()
                p = Interleave(p, self.parse_int())
            elif self.at_sym("[|"):
                self.next()
                shared = self.parse_evset()
                self.eat_sym("|]")
                p = SharedPar(p, shared, self.parse_int())
            elif self.at_sym("[") and not self.at_sym("[[", "[]", "[>", "[|"):
                self.next()
                la = self.parse_evset()
                self.eat_sym("||")
                ra = self.parse_evset()
                self.eat_sym("]")
                p = AlphaPar(p, la, self.parse_int(), ra)
            else:
                return p

    def parse_int(self):
        p = self.parse_ext()
        while self.at_sym("|~|"):
            self.next()
            p = IntChoice(p, self.parse_ext())
        return p

    def parse_ext(self):
        p = self.parse_slide()
        while self.at_sym("[]"):
            self.next()
            p = ExtChoice(p, self.parse_slide())
        return p

    def parse_slide(self):
        p = self.parse_guarded()
        while self.at_sym("[>"):
            self.next()
            p = Sliding(p, self.parse_guarded())
        return p

    def parse_guarded(self):
        mark = self.pos
        try:
            b = self.parse_bool()
            if self.at_sym("&"):
                self.eat_sym("&")
                return If(b, self.parse_guarded(), Stop())
        except ParseError:
            pass
        self.pos = mark
        return self.parse_prefix()

    def parse_prefix(self):
        tok = self.peek()
        if tok.kind == "ident" and tok.text in self.defs.channels:
            chan_tok = self.next()
            alpha = self.parse_construct(chan_tok)
            self.eat_sym("->")
            return Prefix(alpha, self.parse_prefix())
        return self.parse_atom()

    def parse_rename_target(self):
        tok = self.eat_ident("channel name")
        if tok.text not in self.defs.channels:
            self.fail(f"undeclared channel {tok.text!r}", tok)
        if self.at_sym("."):
            name, datums = self.parse_event_fields(tok, complete=True)
            return EventLitItem(name, datums)
        return tok.text

    def parse_atom(self):
        tok = self.peek()
        if self.at_kw("STOP"):
            self.next()
            return self.parse_postfix(Stop())
        if self.at_kw("if"):
            self.next()
            b = self.parse_bool()
            if not self.at_kw("then"):
                self.fail("expected 'then'")
            self.next()
            then = self.parse_proc()
            if not self.at_kw("else"):
                self.fail("expected 'else'")
            self.next()
            els = self.parse_proc()
            return If(b, then, els)
        if self.at_sym("|||", "|~|", "[]", "||"):
            return self.parse_replicated()
        if self.at_sym("("):
            self.eat_sym("(")
            p = self.parse_proc()
            self.eat_sym(")")
            return self.parse_postfix(p)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            if tok.text in self.defs.channels:
                self.fail(f"channel {tok.text!r} used as a process "
                          "(missing '->'?)", tok)
            if self.at_sym("$", "?", "!", "."):
                self.fail(f"undeclared channel {tok.text!r}", tok)
            args = ()
            if self.at_sym("("):
                self.eat_sym("(")
                out = []
                while True:
                    out.append(self.parse_scalar())
                    if not self.at_sym(","):
                        break
                    self.eat_sym(",")
                self.eat_sym(")")
                args = tuple(out)
            return self.parse_postfix(Ident(tok.text, args))
        self.fail(f"expected a process, found {tok.text or 'end of input'!r}", tok)

    def parse_postfix(self, p):
        while self.at_sym("[["):
            self.eat_sym("[[")
            pairs = []
            while True:
                a = self.parse_rename_target()
                self.eat_sym("<-")
                b = self.parse_rename_target()
                pairs.append((a, b))
                if not self.at_sym(","):
                    break
                self.eat_sym(",")
            self.eat_sym("]]")
            p = Rename(p, tuple(pairs))
        return p

    def parse_replicated(self):
        op = self.next().text
        var = self.eat_ident("index variable")
        self.eat_sym(":")
        dom_tok = self.peek()
        domain = self.parse_type_expr()
        self.eat_sym("@")
        alpha = None
        if op == "||":
            self.eat_sym("[")
            alpha = self.parse_evset()
            self.eat_sym("]")
        body = self.parse_proc()
        if self._type_class(domain) == "t":
            if op == "|||":
                return ReplInterleave(var.text, domain, body)
            if op == "|~|":
                return ReplIntChoice(var.text, domain, body)
            if op == "[]":
                return ReplExtChoice(var.text, domain, body)
            return ReplAlphaPar(var.text, domain, alpha, body)
        # finite non-t domain: desugar to the binary operator
        if isinstance(domain, NamedType):
            members = list(domain.values)
        else:
            members = [i for i in domain.items]
            if any(isinstance(i, str) for i in members):
                self.fail("replicated operator over a set with variables", dom_tok)
        if not members:
            self.fail("replicated operator over an empty set", dom_tok)
        branches = [substitute(body, {var.text: v}) for v in members]
        if op == "||":
            self.fail("replicated alphabetised parallel over a non-t set is "
                      "not supported; use the binary operator", dom_tok)
        combine = {"|||": Interleave, "|~|": IntChoice, "[]": ExtChoice}[op]
        out = branches[0]
        for b in branches[1:]:
            out = combine(out, b)
        return out


# ---------------------------------------------------------------------------
# Item scanning (two-pass): declarations first, equation bodies second.

_DECL_KWS = ("channel", "datatype", "const", "assert")


def _is_eq_head(toks: list[Token], j: int) -> bool:
    t = toks[j]
    if t.kind != "ident" or t.text in KEYWORDS:
        return False
    k = j + 1
    if toks[k].kind == "sym" and toks[k].text == "(":
        depth = 1
        k += 1
        while toks[k].kind != "eof" and depth:
            if toks[k].kind == "sym" and toks[k].text == "(":
                depth += 1
            elif toks[k].kind == "sym" and toks[k].text == ")":
                depth -= 1
            k += 1
        if depth:
            return False
    return toks[k].kind == "sym" and toks[k].text == "="


def _sym_at(toks, j, text) -> bool:
    return toks[j].kind == "sym" and toks[j].text == text


def _decl_extent(toks: list[Token], i: int, filename: str) -> int:
    """Token index one past a declaration item, found by shape alone (no name
    resolution, so declarations may reference types defined later)."""
    kw = toks[i].text

    def oops(j):
        t = toks[min(j, len(toks) - 1)]
        raise ParseError([Diagnostic(
            f"malformed {kw} declaration", t.line, t.col, filename)])

    def consume_type(j):
        if _sym_at(toks, j, "(") or _sym_at(toks, j, "{"):
            close = {"(": ")", "{": "}"}[toks[j].text]
            opened = toks[j].text
            depth = 1
            j += 1
            while toks[j].kind != "eof" and depth:
                if _sym_at(toks, j, opened):
                    depth += 1
                elif _sym_at(toks, j, close):
                    depth -= 1
                j += 1
            if depth:
                oops(j)
            return j
        if toks[j].kind != "ident":
            oops(j)
        j += 1
        if _sym_at(toks, j, "\\"):
            return consume_type(j + 1)
        return j

    j = i + 1
    if kw == "channel":
        if toks[j].kind != "ident":
            oops(j)
        j += 1
        while _sym_at(toks, j, ","):
            if toks[j + 1].kind != "ident":
                oops(j + 1)
            j += 2
        if _sym_at(toks, j, ":"):
            j = consume_type(j + 1)
            while _sym_at(toks, j, "."):
                j = consume_type(j + 1)
        return j
    if kw == "datatype":
        if toks[j].kind != "ident" or not _sym_at(toks, j + 1, "="):
            oops(j)
        j += 2
        if toks[j].kind != "ident":
            oops(j)
        j += 1
        while _sym_at(toks, j, "|"):
            if toks[j + 1].kind != "ident":
                oops(j + 1)
            j += 2
        return j
    if kw == "const":
        if toks[j].kind != "ident" or not _sym_at(toks, j + 1, "=") \
                or toks[j + 2].kind != "num":
            oops(j)
        return j + 3
    # assert
    if toks[j].kind != "ident" or toks[j + 1].text not in ("[T=", "[F=") \
            or toks[j + 2].kind != "ident":
        oops(j)
    return j + 3


def _scan_items(toks: list[Token], filename: str):
    """Split the token stream into declaration and equation items."""
    items = []
    i = 0
    while toks[i].kind != "eof":
        t = toks[i]
        if t.kind == "ident" and t.text in _DECL_KWS:
            j = _decl_extent(toks, i, filename)
            items.append((i, j))
            i = j
            continue
        if not _is_eq_head(toks, i):
            raise ParseError([Diagnostic(
                f"expected a declaration or equation, found {t.text!r}",
                t.line, t.col, filename)])
        j = i + 1
        while toks[j].kind != "eof" and not _is_eq_head(toks, j) \
                and not (toks[j].kind == "ident" and toks[j].text in _DECL_KWS):
            j += 1
        items.append((i, j))
        i = j
    return items


def _parse_decl(p: _Parser, defs: Definitions):
    tok = p.next()
    if tok.text == "channel":
        names = [p.eat_ident("channel name")]
        while p.at_sym(","):
            p.eat_sym(",")
            names.append(p.eat_ident("channel name"))
        sig: tuple = ()
        if p.at_sym(":"):
            p.eat_sym(":")
            tys = [p.parse_type_expr()]
            while p.at_sym("."):
                p.eat_sym(".")
                tys.append(p.parse_type_expr())
            for ty in tys:
                if not isinstance(ty, (TType, NamedType)):
                    p.fail(f"channel field type must be t or a declared type, got {ty}", tok)
            sig = tuple(tys)
        for nt in names:
            if nt.text in defs.channels:
                p.fail(f"duplicate channel {nt.text!r}", nt)
            defs.channels[nt.text] = sig
    elif tok.text == "datatype":
        name = p.eat_ident("type name")
        if name.text in defs.datatypes or name.text == "t":
            p.fail(f"duplicate type {name.text!r}", name)
        p.eat_sym("=")
        members = [p.eat_ident("value name")]
        while p.at_sym("|"):
            p.eat_sym("|")
            members.append(p.eat_ident("value name"))
        seen = set()
        atoms = []
        for i, m in enumerate(members):
            if m.text in seen or p.lookup_atom(m.text) is not None:
                p.fail(f"duplicate value {m.text!r}", m)
            seen.add(m.text)
            atoms.append(Atom(name.text, m.text, i))
        defs.datatypes[name.text] = tuple(atoms)
    elif tok.text == "const":
        name = p.eat_ident("constant name")
        p.eat_sym("=")
        num = p.peek()
        if num.kind != "num":
            p.fail("expected a number", num)
        p.next()
        defs.consts[name.text] = int(num.text)
    else:  # assert
        lhs = p.eat_ident("process name")
        if not p.at_sym("[T=", "[F="):
            p.fail("expected '[T=' or '[F='")
        model = "traces" if p.next().text == "[T=" else "failures"
        rhs = p.eat_ident("process name")
        defs.assertions.append(Assertion(lhs.text, model, rhs.text))


# ---------------------------------------------------------------------------
# Resolution: parameter typing, guard classification, closure checks.

_TY_T = "t"
_TY_NAT = "nat"


class _Resolver:
    def __init__(self, defs: Definitions, filename: str):
        self.defs = defs
        self.filename = filename
        self.diags: list[Diagnostic] = []
        self.param_ty = {name: [None] * len(eq.params)
                         for name, eq in defs.equations.items()}
        self.changed = False
        # untyped variables compared by ==/!= default to the distinguished
        # type once ordinary inference has settled
        self.default_eq_to_t = False

    def error(self, msg: str):
        self.diags.append(Diagnostic(msg, 0, 0, self.filename))

    def set_param(self, eq: str, idx: int, ty):
        cur = self.param_ty[eq][idx]
        if ty is None or cur == ty:
            return
        if cur is None:
            self.param_ty[eq][idx] = ty
            self.changed = True
        else:
            self.error(f"parameter {self.defs.equations[eq].params[idx]!r} of "
                       f"{eq!r} used both as {cur} and as {ty}")

    # scope maps variable name -> 't' | 'nat' | datatype name | None

    def var_ty(self, scope, name):
        return scope.get(name)

    def note_var(self, scope, eq, name, ty):
        if name in scope:
            cur = scope[name]
            if cur is None:
                scope[name] = ty
                if name in self.defs.equations[eq].params:
                    self.set_param(eq, self.defs.equations[eq].params.index(name), ty)
            elif ty is not None and cur != ty:
                self.error(f"variable {name!r} in {eq!r} used both as {cur} and as {ty}")

    def scalar_ty(self, e, scope, eq, expect=None):
        """Infer the type of a scalar expression, propagating expectations."""
        if isinstance(e, NatLit):
            return _TY_NAT
        if isinstance(e, TVal):
            return _TY_T
        if isinstance(e, Atom):
            return e.type_name
        if isinstance(e, VarRef):
            if expect is not None:
                self.note_var(scope, eq, e.name, expect)
            return self.var_ty(scope, e.name)
        if isinstance(e, (NatOp, NatMin)):
            self.scalar_ty(e.left, scope, eq, _TY_NAT)
            self.scalar_ty(e.right, scope, eq, _TY_NAT)
            return _TY_NAT
        return None

    def infer_bool(self, b, scope, eq):
        if isinstance(b, (BoolAnd, BoolOr)):
            self.infer_bool(b.left, scope, eq)
            self.infer_bool(b.right, scope, eq)
        elif isinstance(b, BoolNot):
            self.infer_bool(b.arg, scope, eq)
        elif isinstance(b, Cmp):
            if b.op in ("<", "<=", ">", ">="):
                self.scalar_ty(b.left, scope, eq, _TY_NAT)
                self.scalar_ty(b.right, scope, eq, _TY_NAT)
            else:
                lt = self.scalar_ty(b.left, scope, eq)
                rt = self.scalar_ty(b.right, scope, eq)
                if lt is None and rt is not None:
                    self.scalar_ty(b.left, scope, eq, rt)
                elif rt is None and lt is not None:
                    self.scalar_ty(b.right, scope, eq, lt)
                elif lt is None and rt is None and self.default_eq_to_t:
                    self.scalar_ty(b.left, scope, eq, _TY_T)
                    self.scalar_ty(b.right, scope, eq, _TY_T)

    @staticmethod
    def _binder_ty(ty):
        if isinstance(ty, (TType, DiffType)):
            return _TY_T
        if isinstance(ty, SetType):
            if ty.is_t:
                return _TY_T
            for item in ty.items:
                if isinstance(item, Atom):
                    return item.type_name
            return None
        if isinstance(ty, NamedType):
            return ty.name
        return None

    def infer_term(self, term, scope, eq):
        if isinstance(term, Stop):
            return
        if isinstance(term, Prefix):
            inner = dict(scope)
            for f in term.construct.fields:
                if f.sel in (DOLLAR, QUERY):
                    inner[f.payload] = self._binder_ty(f.ty)
                elif isinstance(f.payload, str):
                    self.note_var(inner, eq, f.payload,
                                  _TY_T if f.bang_is_t else None)
            self.infer_term(term.cont, inner, eq)
            return
        if isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
            self.infer_term(term.left, scope, eq)
            self.infer_term(term.right, scope, eq)
            return
        if isinstance(term, If):
            if not isinstance(term.guard, (Condition, MixedGuard)):
                self.infer_bool(term.guard, scope, eq)
            self.infer_term(term.then, scope, eq)
            self.infer_term(term.els, scope, eq)
            return
        if isinstance(term, (Hide, Rename)):
            self.infer_term(term.proc, scope, eq)
            return
        if isinstance(term, (AlphaPar, SharedPar)):
            self.infer_term(term.left, scope, eq)
            self.infer_term(term.right, scope, eq)
            return
        if isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
            inner = dict(scope)
            inner[term.var] = _TY_T
            self.infer_term(term.body, inner, eq)
            return
        if isinstance(term, Ident):
            callee = self.defs.equations.get(term.name)
            if callee is None:
                self.error(f"undefined process {term.name!r} referenced in {eq!r}")
                return
            if len(term.args) != len(callee.params):
                self.error(f"{term.name!r} expects {len(callee.params)} argument(s), "
                           f"got {len(term.args)} in {eq!r}")
                return
            for i, a in enumerate(term.args):
                pty = self.param_ty[term.name][i]
                aty = self.scalar_ty(a, scope, eq, expect=pty)
                if aty is not None and pty is None:
                    self.set_param(term.name, i, aty)
            return

    def run_inference(self):
        for phase in (False, True):
            self.default_eq_to_t = phase
            for _ in range(len(self.defs.equations) + 2):
                self.changed = False
                for name, eq in self.defs.equations.items():
                    scope = {p: self.param_ty[name][i]
                             for i, p in enumerate(eq.params)}
                    self.infer_term(eq.body, scope, name)
                    for i, p in enumerate(eq.params):
                        if scope[p] is not None:
                            self.set_param(name, i, scope[p])
                if not self.changed:
                    break

    # -- guard classification ------------------------------------------------

    def classify_guard(self, b, scope, eq):
        """Turn a raw boolean expression into a Condition, a non-t boolean, or
        a MixedGuard, based on the inferred side types."""
        if isinstance(b, (Condition, MixedGuard)):
            return b
        negated = False
        while isinstance(b, BoolNot):
            negated = not negated
            b = b.arg
        conj = []
        stack = [b]
        while stack:
            node = stack.pop()
            if isinstance(node, BoolAnd):
                stack.append(node.right)
                stack.append(node.left)
            else:
                conj.append(node)
        t_atoms = []
        other = []
        any_neq = False
        for c in conj:
            if isinstance(c, Cmp) and c.op in ("==", "!="):
                lt = self._side_ty(c.left, scope)
                rt = self._side_ty(c.right, scope)
                if lt == _TY_T or rt == _TY_T:
                    if lt is not None and rt is not None and lt != rt:
                        self.error(f"comparison between {lt} and {rt} in {eq!r}")
                        return BoolLit(False)
                    l = c.left.name if isinstance(c.left, VarRef) else c.left
                    r = c.right.name if isinstance(c.right, VarRef) else c.right
                    if not isinstance(l, (str, TVal)) or not isinstance(r, (str, TVal)):
                        self.error(f"ill-typed t-equality in {eq!r}")
                        return BoolLit(False)
                    if l == r:
                        self.error(f"trivial condition {l}=={r} in {eq!r}")
                    if c.op == "!=":
                        any_neq = True
                        t_atoms.append(("!=", (l, r)))
                    else:
                        t_atoms.append(("==", (l, r)))
                    continue
            other.append(c)
        if t_atoms and not other:
            if any_neq:
                if len(t_atoms) > 1:
                    self.error(f"t-guard in {eq!r} must be a conjunction of "
                               "equalities or the negation of one")
                return Condition(not negated, tuple(a for _, a in t_atoms))
            return Condition(negated, tuple(a for _, a in t_atoms))
        if not t_atoms:
            whole = None
            for c in conj:
                whole = c if whole is None else BoolAnd(whole, c)
            return BoolNot(whole) if negated else whole
        if any_neq:
            self.error(f"mixed guard with t-inequality in {eq!r} is not supported")
        return MixedGuard(negated, tuple(a for _, a in t_atoms), tuple(other))

    def _side_ty(self, e, scope):
        if isinstance(e, VarRef):
            return scope.get(e.name)
        if isinstance(e, TVal):
            return _TY_T
        if isinstance(e, Atom):
            return e.type_name
        return _TY_NAT

    def rewrite(self, term, scope, eq):
        if isinstance(term, Stop):
            return term
        if isinstance(term, Prefix):
            inner = dict(scope)
            for f in term.construct.fields:
                if f.sel in (DOLLAR, QUERY):
                    inner[f.payload] = self._binder_ty(f.ty)
            return Prefix(term.construct, self.rewrite(term.cont, inner, eq))
        if isinstance(term, (ExtChoice, IntChoice, Sliding, Interleave)):
            return type(term)(self.rewrite(term.left, scope, eq),
                              self.rewrite(term.right, scope, eq))
        if isinstance(term, If):
            g = self.classify_guard(term.guard, scope, eq)
            return If(g, self.rewrite(term.then, scope, eq),
                      self.rewrite(term.els, scope, eq))
        if isinstance(term, Hide):
            return Hide(self.rewrite(term.proc, scope, eq), term.hidden)
        if isinstance(term, Rename):
            return Rename(self.rewrite(term.proc, scope, eq), term.pairs)
        if isinstance(term, AlphaPar):
            return AlphaPar(self.rewrite(term.left, scope, eq), term.left_alpha,
                            self.rewrite(term.right, scope, eq), term.right_alpha)
        if isinstance(term, SharedPar):
            return SharedPar(self.rewrite(term.left, scope, eq), term.shared,
                             self.rewrite(term.right, scope, eq))
        if isinstance(term, (ReplAlphaPar, ReplInterleave, ReplIntChoice, ReplExtChoice)):
            inner = dict(scope)
            inner[term.var] = _TY_T
            if isinstance(term, ReplAlphaPar):
                return ReplAlphaPar(term.var, term.domain, term.alpha,
                                    self.rewrite(term.body, inner, eq))
            return type(term)(term.var, term.domain, self.rewrite(term.body, inner, eq))
        if isinstance(term, Ident):
            callee = self.defs.equations.get(term.name)
            if callee is None:
                return term
            args = []
            for i, a in enumerate(term.args):
                if (isinstance(a, NatLit)
                        and i < len(self.param_ty[term.name])
                        and self.param_ty[term.name][i] == _TY_T):
                    args.append(TVal(a.value))
                else:
                    args.append(a)
            return Ident(term.name, tuple(args))
        return term

    def finish(self):
        self.run_inference()
        for name, eq in list(self.defs.equations.items()):
            scope = {p: self.param_ty[name][i] for i, p in enumerate(eq.params)}
            body = self.rewrite(eq.body, scope, name)
            fv = free_vars(body) - set(eq.params)
            for v in sorted(fv):
                self.error(f"undefined variable {v!r} in the definition of {name!r}")
            self.defs.equations[name] = Equation(
                name, eq.params, body, tuple(self.param_ty[name]))
        for a in self.defs.assertions:
            for side in (a.lhs, a.rhs):
                if side not in self.defs.equations:
                    self.error(f"assertion references undefined process {side!r}")
        if self.diags:
            raise ParseError(self.diags)


# ---------------------------------------------------------------------------

def parse_definitions(text: str, filename: str = "<input>") -> Definitions:
    """Parse a definition file into a resolved Definitions value.

    Raises ParseError with positioned diagnostics on any lexical, syntactic
    or resolution failure.
    """
    toks = tokenize(text, filename)
    defs = Definitions(filename=filename)
    items = _scan_items(toks, filename)
    equation_items = []
    decl_items = []
    for start, end in items:
        head = toks[start]
        if head.kind == "ident" and head.text in _DECL_KWS:
            decl_items.append((start, end))
        else:
            equation_items.append((start, end))
    # pass 1: declarations; datatypes and constants first so that channel
    # signatures may reference types declared anywhere in the file
    order = {"datatype": 0, "const": 0, "channel": 1, "assert": 2}
    for start, end in sorted(decl_items, key=lambda it: (order[toks[it[0]].text], it[0])):
        sub = _Parser(toks[start:end] + [toks[-1]], defs, filename)
        _parse_decl(sub, defs)
        rest = sub.peek()
        if rest.kind != "eof":
            raise ParseError([Diagnostic(
                f"unexpected {rest.text!r} after declaration",
                rest.line, rest.col, filename)])
    # pass 2: equation bodies
    uid_base = 0
    for start, end in equation_items:
        sub = _Parser(toks[start:end] + [toks[-1]], defs, filename)
        sub._uid = uid_base
        name_tok = sub.eat_ident("process name")
        params = []
        if sub.at_sym("("):
            sub.eat_sym("(")
            while True:
                params.append(sub.eat_ident("parameter").text)
                if not sub.at_sym(","):
                    break
                sub.eat_sym(",")
            sub.eat_sym(")")
        sub.eat_sym("=")
        if name_tok.text in defs.equations:
            sub.fail(f"duplicate definition of {name_tok.text!r}", name_tok)
        if name_tok.text in defs.channels:
            sub.fail(f"{name_tok.text!r} is already a channel name", name_tok)
        body = sub.parse_proc()
        tail = sub.peek()
        if tail.kind != "eof":
            sub.fail(f"unexpected {tail.text!r} after process definition", tail)
        uid_base = sub._uid
        defs.equations[name_tok.text] = Equation(name_tok.text, tuple(params), body)
    _Resolver(defs, filename).finish()
    return defs


def parse_file(path) -> Definitions:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_definitions(fh.read(), filename=str(path))
