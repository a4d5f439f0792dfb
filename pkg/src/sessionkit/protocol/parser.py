"""Parser for the protocol notation.

    END
    <! (x : int) (l : loc)> MSG t {{ atom * atom }}; p      send
    <? (y : int)> MSG t; p                                  receive
    <!> MSG t; p                                            no binders
    mu r. p              mu r (n : int := 2, xs : list int := []). p
    r                    r(n - 1, append(xs, [x]))          loop references
    (p) <+> (q)          offer a choice (sender picks left/right)
    (p) <&> (q)          accept a choice
    p . q                sequencing: q after p finishes
    if t then (p) else (q)
    dual p

Terms: integers, true/false, (), variables, + - * == < <=, (t, t), [t, ...],
fst/snd/len/reverse/sum/append/mem/remove1/ite as functions.  Payload atoms:
any boolean term, pointsto(l, v), llist(l, xs), llistV(l, xs),
chanown(c, p), trusted("tag"), sorted(ys, xs), perm(ys, xs),
guard(cond, atom).  Atoms are separated by `*`; a `*` whose right side starts
one of the atom keywords is read as a separator, otherwise as multiplication.

Choice is notation, not a node: (p) <+> (q) parses to a boolean send whose
continuation branches on the sent value, and <&> to the receiving form.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from ..lang.ast import FALSE, TRUE, UNIT, VInt
from .ast import Cond, End, Msg, Mu, Protocol, RecVar
from .ops import _splice, choice, dual
from .terms import (
    BOOL, ChanOwn, FinS, Guard, INT, LList, LListNoOwn, ListS, LOC,
    LTerm, Perm, PointsTo, Pred, PureP, Sorted, TApp1, TApp2, TBin, TFst,
    TIf, TList, TLit, TPair, TSnd, Trusted, TVar, VAL,
)


class ProtoParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__("%s (near character %d)" % (msg, pos))
        self.pos = pos


SYMBOLS = ["<+>", "<&>", "<!>", "<?>", "{{", "}}", ":=", "==", "<=", "<!",
           "<?", "(", ")", "[", "]", "<", ">", ";", ".", ",", ":", "+",
           "-", "*", "/"]

ATOM_KEYWORDS = {"pointsto", "llist", "llistV", "chanown", "trusted",
                 "sorted", "perm", "guard"}

TERM_FNS = {"fst": 1, "snd": 1, "len": 1, "reverse": 1, "sum": 1,
            "append": 2, "mem": 2, "remove1": 2, "ite": 3}

KEYWORDS = {"END", "mu", "if", "then", "else", "dual", "MSG", "true",
            "false", "int", "bool", "val", "loc", "list", "fin"}


def _tokenize(src: str) -> List[Tuple[str, object, int]]:
    toks = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c in " \t\r\n":
            i += 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = src.find('"', i + 1)
            if j < 0:
                raise ProtoParseError("unterminated string", i)
            toks.append(("STR", src[i + 1:j], i))
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(("INT", int(src[i:j]), i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'~"):
                j += 1
            toks.append(("NAME", src[i:j], i))
            i = j
            continue
        for sym in SYMBOLS:
            if src.startswith(sym, i):
                toks.append((sym, sym, i))
                i += len(sym)
                break
        else:
            raise ProtoParseError("unexpected character %r" % c, i)
    toks.append(("EOF", None, n))
    return toks


class _P:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self, ahead: int = 0) -> str:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)][0]

    def peek_val(self, ahead: int = 0):
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)][1]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, what: Optional[str] = None):
        t = self.next()
        if t[0] != kind and not (kind == "NAME" and t[0] == "NAME"):
            raise ProtoParseError("expected %s" % (what or kind), t[2])
        if kind == "NAME" and what is not None and t[1] != what:
            raise ProtoParseError("expected %s" % what, t[2])
        return t

    def at_name(self, word: str, ahead: int = 0) -> bool:
        return self.peek(ahead) == "NAME" and self.peek_val(ahead) == word

    def err(self, msg: str):
        raise ProtoParseError(msg, self.toks[self.pos][2])

    # -- protocols ---------------------------------------------------------

    def protocol(self) -> Protocol:
        left = self.seq()
        k = self.peek()
        if k in ("<+>", "<&>"):
            self.next()
            right = self.seq()
            return choice("!" if k == "<+>" else "?", left, right)
        return left

    def seq(self) -> Protocol:
        p = self.prim()
        while self.peek() == ".":
            self.next()
            q = self.prim()
            p = _splice(p, q)
        return p

    def prim(self) -> Protocol:
        k = self.peek()
        if k == "NAME":
            w = self.peek_val()
            if w == "END":
                self.next()
                return End()
            if w == "mu":
                return self.mu()
            if w == "if":
                self.next()
                c = self.term()
                self.expect("NAME", "then")
                t = self.protocol()
                self.expect("NAME", "else")
                e = self.protocol()
                return Cond(c, t, e)
            if w == "dual":
                self.next()
                return dual(self.prim())
            # recursion reference
            self.next()
            if self.peek() == "(":
                self.next()
                args = []
                if self.peek() != ")":
                    args.append(self.term())
                    while self.peek() == ",":
                        self.next()
                        args.append(self.term())
                self.expect(")")
                return RecVar(w, tuple(args))
            return RecVar(w)
        if k in ("<!", "<?", "<!>", "<?>"):
            return self.msg()
        if k == "(":
            self.next()
            p = self.protocol()
            self.expect(")")
            return p
        self.err("expected a protocol")

    def mu(self) -> Protocol:
        self.expect("NAME", "mu")
        name = self.expect("NAME")[1]
        params = []
        if self.peek() == "(":
            self.next()
            while True:
                pn = self.expect("NAME")[1]
                self.expect(":")
                sort = self.sort()
                self.expect(":=")
                init = self.term()
                params.append((pn, sort, init))
                if self.peek() == ",":
                    self.next()
                    continue
                break
            self.expect(")")
        self.expect(".")
        body = self.protocol()
        return Mu(name, tuple(params), body)

    def msg(self) -> Protocol:
        k, _, pos = self.next()
        action = "!" if k in ("<!", "<!>") else "?"
        binders = []
        if k in ("<!", "<?"):
            while self.peek() == "(":
                self.next()
                bn = self.expect("NAME")[1]
                self.expect(":")
                sort = self.sort()
                self.expect(")")
                binders.append((bn, sort))
            self.expect(">")
        self.expect("NAME", "MSG")
        value = self.term()
        payload = Pred()
        if self.peek() == "{{":
            self.next()
            atoms = [self.atom()]
            while self.peek() == "*":
                self.next()
                atoms.append(self.atom())
            self.expect("}}")
            atoms = [a for a in atoms if not _is_literal_true(a)]
            payload = Pred(tuple(atoms))
        self.expect(";")
        tail = self.protocol()
        return Msg(action, tuple(binders), value, payload, tail)

    def sort(self):
        t = self.expect("NAME")
        w = t[1]
        if w == "int":
            return INT
        if w == "bool":
            return BOOL
        if w == "val":
            return VAL
        if w == "loc":
            return LOC
        if w == "list":
            return ListS(self.sort())
        if w == "fin":
            self.expect("(")
            vals = []
            while True:
                tm = self.term()
                from .terms import eval_term
                v = eval_term(tm, None)
                if v is None:
                    self.err("fin(...) needs literal values")
                vals.append(v)
                if self.peek() == ",":
                    self.next()
                    continue
                break
            self.expect(")")
            return FinS(tuple(vals))
        raise ProtoParseError("unknown sort %r" % w, t[2])

    # -- payload atoms -------------------------------------------------------

    def atom(self):
        if self.peek() == "NAME":
            w = self.peek_val()
            if w == "true" and self.peek(1) in ("*", "}}"):
                self.next()
                return PureP(TLit(TRUE))
            if w in ATOM_KEYWORDS:
                return self.keyword_atom()
        return PureP(self.term())

    def keyword_atom(self):
        w = self.next()[1]
        self.expect("(")
        if w == "trusted":
            tag = self.expect("STR")[1]
            self.expect(")")
            if not tag:
                raise ProtoParseError("trusted atoms need a nonempty tag",
                                      self.toks[self.pos - 1][2])
            return Trusted(tag)
        if w == "chanown":
            ep = self.term()
            self.expect(",")
            proto = self.protocol()
            self.expect(")")
            return ChanOwn(ep, proto)
        if w == "guard":
            cond = self.term()
            self.expect(",")
            inner = self.atom()
            self.expect(")")
            return Guard(cond, inner)
        a = self.term()
        self.expect(",")
        b = self.term()
        self.expect(")")
        if w == "pointsto":
            return PointsTo(a, b)
        if w == "llist":
            return LList(a, b)
        if w == "llistV":
            return LListNoOwn(a, b)
        if w == "sorted":
            return Sorted(a, b)
        if w == "perm":
            return Perm(a, b)
        raise AssertionError(w)

    # -- terms ---------------------------------------------------------------

    def term(self) -> LTerm:
        l = self.add()
        k = self.peek()
        if k in ("==", "<", "<="):
            self.next()
            r = self.add()
            return TBin("=" if k == "==" else k, l, r)
        return l

    def add(self) -> LTerm:
        l = self.mul()
        while self.peek() in ("+", "-"):
            op = self.next()[0]
            l = TBin(op, l, self.mul())
        return l

    def mul(self) -> LTerm:
        l = self.factor()
        while self.peek() == "*" and self._starts_factor(1):
            self.next()
            l = TBin("*", l, self.factor())
        return l

    def _starts_factor(self, ahead: int) -> bool:
        k = self.peek(ahead)
        if k in ("INT", "(", "["):
            return True
        if k == "-" and self.peek(ahead + 1) == "INT":
            return True
        if k == "NAME":
            w = self.peek_val(ahead)
            return w not in ATOM_KEYWORDS and w not in ("MSG", "then", "else")
        return False

    def factor(self) -> LTerm:
        k, v, pos = self.toks[self.pos]
        if k == "INT":
            self.next()
            return TLit(VInt(v))
        if k == "-" and self.peek(1) == "INT":
            self.next()
            return TLit(VInt(-self.next()[1]))
        if k == "[":
            self.next()
            items = []
            if self.peek() != "]":
                items.append(self.term())
                while self.peek() == ",":
                    self.next()
                    items.append(self.term())
            self.expect("]")
            return TList(tuple(items))
        if k == "(":
            self.next()
            if self.peek() == ")":
                self.next()
                return TLit(UNIT)
            parts = [self.term()]
            while self.peek() == ",":
                self.next()
                parts.append(self.term())
            self.expect(")")
            t = parts[-1]
            for p in reversed(parts[:-1]):
                t = TPair(p, t)
            return t
        if k == "NAME":
            self.next()
            if v == "true":
                return TLit(TRUE)
            if v == "false":
                return TLit(FALSE)
            if v in TERM_FNS and self.peek() == "(":
                self.next()
                args = [self.term()]
                while self.peek() == ",":
                    self.next()
                    args.append(self.term())
                self.expect(")")
                if len(args) != TERM_FNS[v]:
                    raise ProtoParseError(
                        "%s takes %d arguments" % (v, TERM_FNS[v]), pos)
                if v == "fst":
                    return TFst(args[0])
                if v == "snd":
                    return TSnd(args[0])
                if v == "ite":
                    return TIf(args[0], args[1], args[2])
                if TERM_FNS[v] == 1:
                    return TApp1(v, args[0])
                return TApp2(v, args[0], args[1])
            if v in KEYWORDS:
                raise ProtoParseError("%r cannot be a variable" % v, pos)
            return TVar(v)
        raise ProtoParseError("expected a term", pos)


def _is_literal_true(a) -> bool:
    if a.__class__ is not PureP or a.term.__class__ is not TLit:
        return False
    v = a.term.v
    return v.__class__ is TRUE.__class__ and v.b is True


def parse_protocol(src: str) -> Protocol:
    p = _P(_tokenize(src))
    proto = p.protocol()
    p.expect("EOF")
    from .ops import free_binders, free_rec_vars
    loose_vars = free_binders(proto)
    if loose_vars:
        raise ProtoParseError("unbound variable(s): %s"
                              % ", ".join(sorted(loose_vars)), len(src))
    loose_recs = free_rec_vars(proto)
    if loose_recs:
        raise ProtoParseError("unbound recursion name(s): %s"
                              % ", ".join(sorted(loose_recs)), len(src))
    return proto


def parse_term(src: str) -> LTerm:
    p = _P(_tokenize(src))
    t = p.term()
    p.expect("EOF")
    return t
