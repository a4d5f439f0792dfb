"""Parser for the surface program syntax.

The notation follows the usual ML-flavoured style for this kind of language:

    let: "x" := e1 in e2          rec: "f" "x" "y" := e        λ: "x", e
    if: e then e1 else e2         e1 ;; e2                     e1 <- e2
    ref e      ! e      CAS e e e      Fork { e }
    match: e with InjL "x" => e1 | InjR "y" => e2 end
    #() #42 #true #false          (e1, e2, e3)   fst e   snd e
    NONE / SOME e                 select c left   branch c { e1 } { e2 }

Binders may be written quoted ("x") or bare (x); variable references too.
`new_chan @"name" #()` and `start @"name" f` tag the created channel so a
protocol can be attached to it by name.  `__emit` is internal notation used
by the runtime library to raise monitor events.

Branches and bodies extend as far right as possible; parenthesize to stop
them early.  Comments are `// ...` and nestable `(* ... *)`.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .ast import (
    EApp, EBinOp, EBranch, ECAS, EFork, EFst, EHook, EIf, EInj, ELoad,
    EMatch, EPair, ERec, ERef, ESelect, ESnd, EStore, EVal, EVar, Expr,
    FALSE, TRUE, UNIT, VInt,
)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__("%s at line %d col %d" % (msg, line, col))
        self.line = line
        self.col = col


KW_COLON = {"let", "rec", "fun", "if", "match", "assert", "λ"}
KW_BARE = {
    "in", "then", "else", "with", "end", "InjL", "InjR", "NONE", "SOME",
    "fst", "snd", "ref", "Fork", "CAS", "select", "branch", "left", "right",
    "__emit",
}
SYMBOLS = [";;", ":=", "<-", "<=", "=>", "(", ")", "{", "}", ",", "|",
           "!", "+", "-", "*", "=", "<"]

HOOK_ARITY = {"send": 2, "recv": 2, "new_chan": 1}


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c in "_'"


def tokenize(src: str) -> List[Tuple[str, object, int, int]]:
    toks = []
    i = 0
    n = len(src)
    line = 1
    col = 1

    def bump(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c in " \t\r\n":
            bump(1)
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                bump(1)
            continue
        if src.startswith("(*", i):
            depth = 1
            bump(2)
            while i < n and depth:
                if src.startswith("(*", i):
                    depth += 1
                    bump(2)
                elif src.startswith("*)", i):
                    depth -= 1
                    bump(2)
                else:
                    bump(1)
            if depth:
                raise ParseError("unterminated comment", line, col)
            continue
        tl, tc = line, col
        if c == "#":
            if src.startswith("#()", i):
                toks.append(("LIT", UNIT, tl, tc))
                bump(3)
                continue
            if src.startswith("#true", i):
                toks.append(("LIT", TRUE, tl, tc))
                bump(5)
                continue
            if src.startswith("#false", i):
                toks.append(("LIT", FALSE, tl, tc))
                bump(6)
                continue
            j = i + 1
            if j < n and src[j] == "-":
                j += 1
            k = j
            while k < n and src[k].isdigit():
                k += 1
            if k == j:
                raise ParseError("bad literal", tl, tc)
            toks.append(("LIT", VInt(int(src[i + 1:k])), tl, tc))
            bump(k - i)
            continue
        if c == "@":
            if i + 1 >= n or src[i + 1] != '"':
                raise ParseError("expected @\"label\"", tl, tc)
            j = src.find('"', i + 2)
            if j < 0:
                raise ParseError("unterminated label", tl, tc)
            toks.append(("LABEL", src[i + 2:j], tl, tc))
            bump(j + 1 - i)
            continue
        if c == '"':
            j = src.find('"', i + 1)
            if j < 0:
                raise ParseError("unterminated name", tl, tc)
            toks.append(("QVAR", src[i + 1:j], tl, tc))
            bump(j + 1 - i)
            continue
        if c == "λ":
            if i + 1 < n and src[i + 1] == ":":
                toks.append(("KW", "fun", tl, tc))
                bump(2)
                continue
            raise ParseError("expected λ:", tl, tc)
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(src[j]):
                j += 1
            word = src[i:j]
            if word in KW_COLON and j < n and src[j] == ":" and not src.startswith(":=", j):
                toks.append(("KW", "fun" if word == "λ" else word, tl, tc))
                bump(j + 1 - i)
                continue
            if word in KW_BARE:
                toks.append((word, word, tl, tc))
            else:
                toks.append(("IDENT", word, tl, tc))
            bump(j - i)
            continue
        for sym in SYMBOLS:
            if src.startswith(sym, i):
                toks.append((sym, sym, tl, tc))
                bump(len(sym))
                break
        else:
            raise ParseError("unexpected character %r" % c, tl, tc)
    toks.append(("EOF", None, line, col))
    return toks


def _lam(binder: str, body: Expr) -> Expr:
    return ERec("_", binder, body)


def _let(binder: str, rhs: Expr, body: Expr) -> Expr:
    return EApp(_lam(binder, body), rhs)


def _seq(a: Expr, b: Expr) -> Expr:
    return _let("_", a, b)


STUCK_EXPR_FACTORY = lambda: EApp(EVal(VInt(0)), EVal(VInt(0)))  # noqa: E731


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0
        self.fresh = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self) -> str:
        return self.toks[self.pos][0]

    def peek_val(self):
        return self.toks[self.pos][1]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str):
        t = self.next()
        if t[0] != kind:
            raise ParseError("expected %s, found %r" % (kind, t[1] if t[1] is not None else t[0]),
                             t[2], t[3])
        return t

    def err(self, msg: str):
        t = self.toks[self.pos]
        raise ParseError(msg, t[2], t[3])

    # -- binders ------------------------------------------------------------

    def parse_binder(self):
        """A single binder name or a tuple pattern of binders."""
        k = self.peek()
        if k in ("QVAR", "IDENT"):
            return self.next()[1]
        if k == "(":
            self.next()
            parts = [self.parse_binder()]
            while self.peek() == ",":
                self.next()
                parts.append(self.parse_binder())
            self.expect(")")
            pat = parts[-1]
            for p in reversed(parts[:-1]):
                pat = (p, pat)
            return pat
        self.err("expected a binder")

    def bind_pattern(self, pat, rhs: Expr, body: Expr) -> Expr:
        if isinstance(pat, str):
            return _let(pat, rhs, body)
        tmp = "%p%d" % self.fresh
        self.fresh += 1
        a, b = pat
        inner = self.bind_pattern(a, EFst(EVar(tmp)),
                                  self.bind_pattern(b, ESnd(EVar(tmp)), body))
        return _let(tmp, rhs, inner)

    # -- expressions ----------------------------------------------------------

    def parse_expr(self) -> Expr:
        e = self.parse_form()
        if self.peek() == ";;":
            self.next()
            return _seq(e, self.parse_expr())
        return e

    def parse_form(self) -> Expr:
        k = self.peek()
        if k == "KW":
            word = self.peek_val()
            if word == "let":
                self.next()
                pat = self.parse_binder()
                self.expect(":=")
                rhs = self.parse_expr()
                self.expect("in")
                body = self.parse_expr()
                return self.bind_pattern(pat, rhs, body)
            if word == "rec":
                self.next()
                f = self.parse_binder()
                if not isinstance(f, str):
                    self.err("recursive name cannot be a pattern")
                args = []
                while self.peek() in ("QVAR", "IDENT"):
                    args.append(self.next()[1])
                if not args:
                    self.err("rec needs at least one argument")
                self.expect(":=")
                body = self.parse_expr()
                for a in reversed(args[1:]):
                    body = _lam(a, body)
                return ERec(f, args[0], body)
            if word == "fun":
                self.next()
                args = []
                while self.peek() in ("QVAR", "IDENT"):
                    args.append(self.next()[1])
                if not args:
                    self.err("λ needs at least one binder")
                self.expect(",")
                body = self.parse_expr()
                for a in reversed(args):
                    body = _lam(a, body)
                return body
            if word == "if":
                self.next()
                cond = self.parse_expr()
                self.expect("then")
                then = self.parse_expr()
                self.expect("else")
                els = self.parse_expr()
                return EIf(cond, then, els)
            if word == "match":
                self.next()
                return self.parse_match()
            if word == "assert":
                self.next()
                cond = self.parse_expr()
                return EIf(cond, EVal(UNIT), STUCK_EXPR_FACTORY())
            self.err("unexpected keyword %s:" % word)
        return self.parse_store()

    def parse_match(self) -> Expr:
        scrut = self.parse_expr()
        self.expect("with")
        if self.peek() == "|":
            self.next()
        k = self.peek()
        if k == "NONE":
            self.next()
            self.expect("=>")
            el = self.parse_expr()
            self.expect("|")
            self.expect("SOME")
            xr = self.parse_binder()
            if not isinstance(xr, str):
                self.err("SOME binder cannot be a pattern")
            self.expect("=>")
            er = self.parse_expr()
            self.expect("end")
            return EMatch(scrut, "_", el, xr, er)
        self.expect("InjL")
        xl = self.parse_binder()
        if not isinstance(xl, str):
            self.err("InjL binder cannot be a pattern")
        self.expect("=>")
        el = self.parse_expr()
        self.expect("|")
        self.expect("InjR")
        xr = self.parse_binder()
        if not isinstance(xr, str):
            self.err("InjR binder cannot be a pattern")
        self.expect("=>")
        er = self.parse_expr()
        self.expect("end")
        return EMatch(scrut, xl, el, xr, er)

    def parse_store(self) -> Expr:
        l = self.parse_cmp()
        if self.peek() == "<-":
            self.next()
            return EStore(l, self.parse_cmp())
        return l

    def parse_cmp(self) -> Expr:
        l = self.parse_add()
        k = self.peek()
        if k in ("=", "<", "<="):
            self.next()
            return EBinOp(k, l, self.parse_add())
        return l

    def parse_add(self) -> Expr:
        l = self.parse_mul()
        while self.peek() in ("+", "-"):
            op = self.next()[0]
            l = EBinOp(op, l, self.parse_mul())
        return l

    def parse_mul(self) -> Expr:
        l = self.parse_app()
        while self.peek() == "*":
            self.next()
            l = EBinOp("*", l, self.parse_app())
        return l

    ATOM_START = {"LIT", "QVAR", "IDENT", "(", "!", "fst", "snd", "ref",
                  "InjL", "InjR", "NONE", "SOME", "Fork", "CAS", "select",
                  "branch", "left", "right", "__emit"}

    def parse_app(self) -> Expr:
        e = self.parse_atom()
        while self.peek() in self.ATOM_START:
            e = EApp(e, self.parse_atom())
        return e

    def parse_atom(self) -> Expr:
        k, v, line, col = self.toks[self.pos]
        if k == "LIT":
            self.next()
            return EVal(v)
        if k == "QVAR":
            self.next()
            return EVar(v)
        if k == "IDENT":
            self.next()
            if self.peek() == "LABEL":
                label = self.next()[1]
                if v == "new_chan":
                    return self._labeled_new_chan(label)
                if v == "start":
                    return self._labeled_start(label)
                self.err("only new_chan and start accept a @\"label\"")
            return EVar(v)
        if k == "(":
            self.next()
            parts = [self.parse_expr()]
            while self.peek() == ",":
                self.next()
                parts.append(self.parse_expr())
            self.expect(")")
            e = parts[-1]
            for p in reversed(parts[:-1]):
                e = EPair(p, e)
            return e
        if k == "!":
            self.next()
            return ELoad(self.parse_atom())
        if k == "fst":
            self.next()
            return EFst(self.parse_atom())
        if k == "snd":
            self.next()
            return ESnd(self.parse_atom())
        if k == "ref":
            self.next()
            return ERef(self.parse_atom())
        if k == "InjL":
            self.next()
            return EInj(1, self.parse_atom())
        if k == "InjR":
            self.next()
            return EInj(2, self.parse_atom())
        if k == "NONE":
            self.next()
            return EInj(1, EVal(UNIT))
        if k == "SOME":
            self.next()
            return EInj(2, self.parse_atom())
        if k == "left":
            self.next()
            return EVal(TRUE)
        if k == "right":
            self.next()
            return EVal(FALSE)
        if k == "Fork":
            self.next()
            self.expect("{")
            e = self.parse_expr()
            self.expect("}")
            return EFork(e)
        if k == "CAS":
            self.next()
            return ECAS(self.parse_atom(), self.parse_atom(), self.parse_atom())
        if k == "select":
            self.next()
            return ESelect(self.parse_atom(), self.parse_atom())
        if k == "branch":
            self.next()
            chan = self.parse_atom()
            self.expect("{")
            l = self.parse_expr()
            self.expect("}")
            self.expect("{")
            r = self.parse_expr()
            self.expect("}")
            return EBranch(chan, l, r)
        if k == "__emit":
            self.next()
            kind = self.expect("QVAR")[1]
            if kind not in HOOK_ARITY:
                raise ParseError("unknown event kind %r" % kind, line, col)
            args = [self.parse_atom() for _ in range(HOOK_ARITY[kind])]
            return EHook(kind, None, args)
        raise ParseError("unexpected %r" % (v if v is not None else k), line, col)

    # -- channel labels -------------------------------------------------------

    def _labeled_new_chan(self, label: str) -> Expr:
        cc = EVar("%cc")
        body = _let("%cc", EApp(EVar("new_chan"), EVar("%u")),
                    _seq(EHook("chan_label", label, [cc]), cc))
        return _lam("%u", body)

    def _labeled_start(self, label: str) -> Expr:
        nc = self._labeled_new_chan(label)
        body = _let("%cc", EApp(nc, EVal(UNIT)),
                    _seq(EFork(EApp(EVar("%f"), ESnd(EVar("%cc")))),
                         EFst(EVar("%cc"))))
        return _lam("%f", body)


def parse_program(src: str) -> Expr:
    p = _Parser(tokenize(src))
    e = p.parse_expr()
    p.expect("EOF")
    return e
