"""Textual form of protocols, terms, and predicates.

The printer emits the same notation the protocol parser accepts, so
print/parse round-trips preserve protocols up to bound-name renaming.
"""

from __future__ import annotations

from .ast import Cond, End, Msg, Mu, Protocol, RecVar
from .terms import (
    BoolS, ChanOwn, FinS, Guard, IntS, LList, LListNoOwn, ListS, LocS,
    Perm, PointsTo, Pred, PureP, Sort, Sorted, TApp1, TApp2, TBin, TFst,
    TIf, TList, TLit, TPair, TSko, TSnd, Trusted, TVar, ValS,
)
from ..lang.ast import VBool, VInj, VInt, VLoc, VPair, VUnit


def print_sort(s: Sort) -> str:
    c = s.__class__
    if c is IntS:
        return "int"
    if c is BoolS:
        return "bool"
    if c is ValS:
        return "val"
    if c is LocS:
        return "loc"
    if c is ListS:
        return "list %s" % print_sort(s.elem)
    if c is FinS:
        return "fin(%s)" % ", ".join(_print_sval(v) for v in s.values)
    raise TypeError("unknown sort %r" % s)


def _print_sval(v) -> str:
    if isinstance(v, tuple):
        return "[%s]" % ", ".join(_print_sval(x) for x in v)
    c = v.__class__
    if c is VInt:
        return str(v.n)
    if c is VBool:
        return "true" if v.b else "false"
    if c is VUnit:
        return "()"
    if c is VPair:
        return "(%s, %s)" % (_print_sval(v.a), _print_sval(v.b))
    if c is VLoc:
        return "loc:%d" % v.i
    if c is VInj:
        return "inj%d(%s)" % (v.which, _print_sval(v.v))
    return repr(v)


# term printing with three precedence levels: cmp(0) < add(1) < mul(2) < atom(3)

def print_term(t, level: int = 0) -> str:
    c = t.__class__
    if c is TLit:
        return _print_sval(t.v)
    if c is TVar:
        return t.name
    if c is TSko:
        return "?%s%d" % (t.hint if t.hint != "?" else "k", t.uid)
    if c is TBin:
        if t.op in ("=", "<", "<="):
            s = "%s %s %s" % (print_term(t.l, 1),
                              "==" if t.op == "=" else t.op,
                              print_term(t.r, 1))
            return "(%s)" % s if level > 0 else s
        if t.op in ("+", "-"):
            s = "%s %s %s" % (print_term(t.l, 1), t.op, print_term(t.r, 2))
            return "(%s)" % s if level > 1 else s
        s = "%s * %s" % (print_term(t.l, 2), print_term(t.r, 3))
        return "(%s)" % s if level > 2 else s
    if c is TPair:
        return "(%s, %s)" % (print_term(t.a), print_term(t.b))
    if c is TFst:
        return "fst(%s)" % print_term(t.t)
    if c is TSnd:
        return "snd(%s)" % print_term(t.t)
    if c is TList:
        return "[%s]" % ", ".join(print_term(i) for i in t.items)
    if c is TApp1:
        return "%s(%s)" % (t.fn, print_term(t.t))
    if c is TApp2:
        return "%s(%s, %s)" % (t.fn, print_term(t.a), print_term(t.b))
    if c is TIf:
        return "ite(%s, %s, %s)" % (print_term(t.c), print_term(t.a),
                                    print_term(t.b))
    raise TypeError("unknown term %r" % t)


def print_atom(a) -> str:
    c = a.__class__
    if c is PureP:
        return print_term(a.term)
    if c is PointsTo:
        return "pointsto(%s, %s)" % (print_term(a.loc), print_term(a.val))
    if c is LList:
        return "llist(%s, %s)" % (print_term(a.loc), print_term(a.items))
    if c is LListNoOwn:
        return "llistV(%s, %s)" % (print_term(a.loc), print_term(a.items))
    if c is ChanOwn:
        return "chanown(%s, %s)" % (print_term(a.endpoint),
                                    print_protocol(a.proto))
    if c is Trusted:
        return 'trusted("%s")' % a.tag
    if c is Sorted:
        return "sorted(%s, %s)" % (print_term(a.out), print_term(a.inp))
    if c is Perm:
        return "perm(%s, %s)" % (print_term(a.out), print_term(a.inp))
    if c is Guard:
        return "guard(%s, %s)" % (print_term(a.cond), print_atom(a.atom))
    raise TypeError("unknown atom %r" % a)


def print_pred(p: Pred) -> str:
    if not p.atoms:
        return "true"
    return " * ".join(print_atom(a) for a in p.atoms)


def print_protocol(p: Protocol) -> str:
    c = p.__class__
    if c is End:
        return "END"
    if c is Msg:
        if p.binders:
            head = "<%s %s>" % (p.action,
                                " ".join("(%s : %s)" % (n, print_sort(s))
                                         for n, s in p.binders))
        else:
            head = "<%s>" % p.action
        body = "%s MSG %s" % (head, print_term(p.value, level=3))
        if p.payload.atoms:
            body += " {{ %s }}" % print_pred(p.payload)
        return "%s; %s" % (body, print_protocol(p.tail))
    if c is Mu:
        if p.params:
            ps = ", ".join("%s : %s := %s" % (n, print_sort(s), print_term(i))
                           for n, s, i in p.params)
            return "mu %s (%s). %s" % (p.name, ps, print_protocol(p.body))
        return "mu %s. %s" % (p.name, print_protocol(p.body))
    if c is RecVar:
        if p.args:
            return "%s(%s)" % (p.name, ", ".join(print_term(a) for a in p.args))
        return p.name
    if c is Cond:
        return "if %s then (%s) else (%s)" % (print_term(p.cond),
                                              print_protocol(p.then),
                                              print_protocol(p.els))
    raise TypeError("unknown protocol node %r" % p)
