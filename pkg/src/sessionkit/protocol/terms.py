"""Logic-level terms and predicates used inside protocols.

Terms live in a small first-order language over the runtime values plus
meta-lists (Python tuples of values).  They are symbolic: evaluation returns
None whenever a variable or placeholder blocks it, and fold() simplifies
every ground subterm so two terms can be compared syntactically after
substitution.
"""

from __future__ import annotations

from typing import Dict, Iterator, Optional, Tuple

from ..lang.ast import (
    FALSE, TRUE, UNIT, Value, VBool, VInj, VInt, VLoc, VPair, value_eq,
)


# ---------------------------------------------------------------------------
# Sorts

class Sort:
    __slots__ = ()

    def __eq__(self, other):
        return self.__class__ is other.__class__

    def __hash__(self):
        return hash(self.__class__)


class IntS(Sort):
    __slots__ = ()

    def __repr__(self):
        return "int"


class BoolS(Sort):
    __slots__ = ()

    def __repr__(self):
        return "bool"


class ValS(Sort):
    __slots__ = ()

    def __repr__(self):
        return "val"


class LocS(Sort):
    __slots__ = ()

    def __repr__(self):
        return "loc"


class ListS(Sort):
    __slots__ = ("elem",)

    def __init__(self, elem: Sort):
        self.elem = elem

    def __eq__(self, other):
        return isinstance(other, ListS) and self.elem == other.elem

    def __hash__(self):
        return hash(("list", self.elem))

    def __repr__(self):
        return "list %r" % self.elem


class FinS(Sort):
    """Finite enumeration sort; carries its inhabitants as Values."""

    __slots__ = ("values",)

    def __init__(self, values: Tuple[Value, ...]):
        self.values = tuple(values)

    def __eq__(self, other):
        return (isinstance(other, FinS)
                and len(self.values) == len(other.values)
                and all(sval_eq(a, b) for a, b in zip(self.values, other.values)))

    def __hash__(self):
        return hash(("fin", len(self.values)))

    def __repr__(self):
        return "fin(%s)" % ", ".join(repr(v) for v in self.values)


INT = IntS()
BOOL = BoolS()
VAL = ValS()
LOC = LocS()


# ---------------------------------------------------------------------------
# Semantic values: runtime Values plus meta-lists (tuples)

def sval_eq(a, b) -> Optional[bool]:
    """Equality on term denotations; None when undecidable (closures)."""
    at = isinstance(a, tuple)
    bt = isinstance(b, tuple)
    if at != bt:
        return False
    if at:
        if len(a) != len(b):
            return False
        for x, y in zip(a, b):
            r = sval_eq(x, y)
            if r is None:
                return None
            if not r:
                return False
        return True
    return value_eq(a, b)


def sval_repr(v) -> str:
    if isinstance(v, tuple):
        return "[%s]" % ", ".join(sval_repr(x) for x in v)
    return repr(v)


# ---------------------------------------------------------------------------
# Terms

class LTerm:
    __slots__ = ()

    def __repr__(self):
        from .printer import print_term
        return print_term(self)


class TLit(LTerm):
    __slots__ = ("v",)

    def __init__(self, v):
        self.v = v


class TVar(LTerm):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name


class TSko(LTerm):
    """Placeholder constant standing for an arbitrary inhabitant of a sort;
    introduced by the subprotocol checker, never by parsing."""

    __slots__ = ("uid", "hint")

    def __init__(self, uid: int, hint: str = "?"):
        self.uid = uid
        self.hint = hint


class TBin(LTerm):
    __slots__ = ("op", "l", "r")

    def __init__(self, op: str, l: LTerm, r: LTerm):
        self.op = op
        self.l = l
        self.r = r


class TPair(LTerm):
    __slots__ = ("a", "b")

    def __init__(self, a: LTerm, b: LTerm):
        self.a = a
        self.b = b


class TFst(LTerm):
    __slots__ = ("t",)

    def __init__(self, t: LTerm):
        self.t = t


class TSnd(LTerm):
    __slots__ = ("t",)

    def __init__(self, t: LTerm):
        self.t = t


class TList(LTerm):
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = tuple(items)


class TApp1(LTerm):
    """Unary list/number operators: len, reverse, sum."""

    __slots__ = ("fn", "t")

    def __init__(self, fn: str, t: LTerm):
        self.fn = fn
        self.t = t


class TApp2(LTerm):
    """Binary operators on lists: append, mem, remove1."""

    __slots__ = ("fn", "a", "b")

    def __init__(self, fn: str, a: LTerm, b: LTerm):
        self.fn = fn
        self.a = a
        self.b = b


class TIf(LTerm):
    __slots__ = ("c", "a", "b")

    def __init__(self, c: LTerm, a: LTerm, b: LTerm):
        self.c = c
        self.a = a
        self.b = b


def term_children(t: LTerm) -> Iterator[LTerm]:
    c = t.__class__
    if c is TBin:
        yield t.l
        yield t.r
    elif c is TPair:
        yield t.a
        yield t.b
    elif c in (TFst, TSnd, TApp1):
        yield t.t
    elif c is TList:
        yield from t.items
    elif c is TApp2:
        yield t.a
        yield t.b
    elif c is TIf:
        yield t.c
        yield t.a
        yield t.b


def term_free_vars(t: LTerm, out: Optional[set] = None) -> set:
    if out is None:
        out = set()
    if t.__class__ is TVar:
        out.add(t.name)
    else:
        for s in term_children(t):
            term_free_vars(s, out)
    return out


def term_has_sko(t: LTerm) -> bool:
    if t.__class__ is TSko:
        return True
    return any(term_has_sko(s) for s in term_children(t))


def subst_term(t: LTerm, env: Dict[str, LTerm]) -> LTerm:
    c = t.__class__
    if c is TVar:
        return env.get(t.name, t)
    if c in (TLit, TSko):
        return t
    if c is TBin:
        return TBin(t.op, subst_term(t.l, env), subst_term(t.r, env))
    if c is TPair:
        return TPair(subst_term(t.a, env), subst_term(t.b, env))
    if c is TFst:
        return TFst(subst_term(t.t, env))
    if c is TSnd:
        return TSnd(subst_term(t.t, env))
    if c is TList:
        return TList(tuple(subst_term(i, env) for i in t.items))
    if c is TApp1:
        return TApp1(t.fn, subst_term(t.t, env))
    if c is TApp2:
        return TApp2(t.fn, subst_term(t.a, env), subst_term(t.b, env))
    if c is TIf:
        return TIf(subst_term(t.c, env), subst_term(t.a, env), subst_term(t.b, env))
    raise TypeError("subst_term: unknown term %r" % t)


def eval_term(t: LTerm, env: Optional[Dict[str, object]] = None):
    """Evaluate to a ground denotation, or None when blocked."""
    c = t.__class__
    if c is TLit:
        return t.v
    if c is TVar:
        if env is None:
            return None
        return env.get(t.name)
    if c is TSko:
        return None
    if c is TBin:
        l = eval_term(t.l, env)
        if l is None:
            return None
        r = eval_term(t.r, env)
        if r is None:
            return None
        op = t.op
        if op == "=":
            e = sval_eq(l, r)
            return None if e is None else (TRUE if e else FALSE)
        if isinstance(l, VInt) and isinstance(r, VInt):
            if op == "+":
                return VInt(l.n + r.n)
            if op == "-":
                return VInt(l.n - r.n)
            if op == "*":
                return VInt(l.n * r.n)
            if op == "<":
                return TRUE if l.n < r.n else FALSE
            if op == "<=":
                return TRUE if l.n <= r.n else FALSE
        return None
    if c is TPair:
        a = eval_term(t.a, env)
        if a is None or isinstance(a, tuple):
            return None
        b = eval_term(t.b, env)
        if b is None or isinstance(b, tuple):
            return None
        return VPair(a, b)
    if c is TFst:
        v = eval_term(t.t, env)
        return v.a if isinstance(v, VPair) else None
    if c is TSnd:
        v = eval_term(t.t, env)
        return v.b if isinstance(v, VPair) else None
    if c is TList:
        out = []
        for i in t.items:
            v = eval_term(i, env)
            if v is None:
                return None
            out.append(v)
        return tuple(out)
    if c is TApp1:
        v = eval_term(t.t, env)
        if v is None:
            return None
        if t.fn == "len":
            return VInt(len(v)) if isinstance(v, tuple) else None
        if t.fn == "reverse":
            return tuple(reversed(v)) if isinstance(v, tuple) else None
        if t.fn == "sum":
            if isinstance(v, tuple) and all(isinstance(x, VInt) for x in v):
                return VInt(sum(x.n for x in v))
            return None
        return None
    if c is TApp2:
        a = eval_term(t.a, env)
        if a is None:
            return None
        b = eval_term(t.b, env)
        if b is None:
            return None
        if t.fn == "append":
            if isinstance(a, tuple) and isinstance(b, tuple):
                return a + b
            return None
        if t.fn == "mem":
            if not isinstance(b, tuple):
                return None
            hit = False
            for x in b:
                e = sval_eq(a, x)
                if e is None:
                    return None
                if e:
                    hit = True
                    break
            return TRUE if hit else FALSE
        if t.fn == "remove1":
            if not isinstance(a, tuple):
                return None
            out = []
            removed = False
            for x in a:
                if not removed:
                    e = sval_eq(x, b)
                    if e is None:
                        return None
                    if e:
                        removed = True
                        continue
                out.append(x)
            return tuple(out)
        return None
    if c is TIf:
        cv = eval_term(t.c, env)
        if not isinstance(cv, VBool):
            return None
        return eval_term(t.a if cv.b else t.b, env)
    raise TypeError("eval_term: unknown term %r" % t)


def fold_term(t: LTerm) -> LTerm:
    """Simplify: evaluate every ground subterm to a literal."""
    v = eval_term(t, None)
    if v is not None:
        return TLit(v)
    c = t.__class__
    if c in (TLit, TVar, TSko):
        return t
    if c is TBin:
        return TBin(t.op, fold_term(t.l), fold_term(t.r))
    if c is TPair:
        return TPair(fold_term(t.a), fold_term(t.b))
    if c is TFst:
        s = fold_term(t.t)
        if s.__class__ is TPair:
            return s.a
        return TFst(s)
    if c is TSnd:
        s = fold_term(t.t)
        if s.__class__ is TPair:
            return s.b
        return TSnd(s)
    if c is TList:
        return TList(tuple(fold_term(i) for i in t.items))
    if c is TApp1:
        return TApp1(t.fn, fold_term(t.t))
    if c is TApp2:
        return TApp2(t.fn, fold_term(t.a), fold_term(t.b))
    if c is TIf:
        cv = eval_term(t.c, None)
        if isinstance(cv, VBool):
            return fold_term(t.a if cv.b else t.b)
        return TIf(fold_term(t.c), fold_term(t.a), fold_term(t.b))
    raise TypeError("fold_term: unknown term %r" % t)


def term_eq(a: LTerm, b: LTerm) -> bool:
    """Structural equality (use after fold_term for semantic comparisons)."""
    ca = a.__class__
    if ca is not b.__class__:
        return False
    if ca is TLit:
        return sval_eq(a.v, b.v) is True
    if ca is TVar:
        return a.name == b.name
    if ca is TSko:
        return a.uid == b.uid
    if ca is TBin:
        return a.op == b.op and term_eq(a.l, b.l) and term_eq(a.r, b.r)
    if ca is TPair:
        return term_eq(a.a, b.a) and term_eq(a.b, b.b)
    if ca in (TFst, TSnd):
        return term_eq(a.t, b.t)
    if ca is TList:
        return (len(a.items) == len(b.items)
                and all(term_eq(x, y) for x, y in zip(a.items, b.items)))
    if ca is TApp1:
        return a.fn == b.fn and term_eq(a.t, b.t)
    if ca is TApp2:
        return a.fn == b.fn and term_eq(a.a, b.a) and term_eq(a.b, b.b)
    if ca is TIf:
        return term_eq(a.c, b.c) and term_eq(a.a, b.a) and term_eq(a.b, b.b)
    return False


# ---------------------------------------------------------------------------
# Predicates: a conjunction of atoms

class Atom:
    __slots__ = ()

    def __repr__(self):
        from .printer import print_atom
        return print_atom(self)


class PureP(Atom):
    __slots__ = ("term",)

    def __init__(self, term: LTerm):
        self.term = term


class PointsTo(Atom):
    __slots__ = ("loc", "val")

    def __init__(self, loc: LTerm, val: LTerm):
        self.loc = loc
        self.val = val


class LList(Atom):
    """Linked list at a location with the given contents; owning the spine."""

    __slots__ = ("loc", "items")

    def __init__(self, loc: LTerm, items: LTerm):
        self.loc = loc
        self.items = items


class LListNoOwn(Atom):
    """Linked-list shape assertion that does not claim the spine cells."""

    __slots__ = ("loc", "items")

    def __init__(self, loc: LTerm, items: LTerm):
        self.loc = loc
        self.items = items


class ChanOwn(Atom):
    """Ownership of a channel endpoint governed by the given protocol."""

    __slots__ = ("endpoint", "proto")

    def __init__(self, endpoint: LTerm, proto):
        self.endpoint = endpoint
        self.proto = proto


class Trusted(Atom):
    """Opaque capability tag for a function value crossing a channel."""

    __slots__ = ("tag",)

    def __init__(self, tag: str):
        self.tag = tag


class Sorted(Atom):
    """items2 is an ascending reordering of items (integers)."""

    __slots__ = ("out", "inp")

    def __init__(self, out: LTerm, inp: LTerm):
        self.out = out
        self.inp = inp


class Perm(Atom):
    """out is a permutation of inp."""

    __slots__ = ("out", "inp")

    def __init__(self, out: LTerm, inp: LTerm):
        self.out = out
        self.inp = inp


class Guard(Atom):
    """Atom that only applies when cond evaluates to true."""

    __slots__ = ("cond", "atom")

    def __init__(self, cond: LTerm, atom: Atom):
        self.cond = cond
        self.atom = atom


class Pred:
    """Conjunction of atoms; empty means trivially true."""

    __slots__ = ("atoms",)

    def __init__(self, atoms=()):
        self.atoms = tuple(atoms)

    def __repr__(self):
        from .printer import print_pred
        return print_pred(self)

    def is_trivial(self) -> bool:
        return not self.atoms


TRIVIAL = Pred()


def atom_terms(a: Atom):
    """The term slots of an atom, for generic traversal."""
    c = a.__class__
    if c is PureP:
        return (a.term,)
    if c is PointsTo:
        return (a.loc, a.val)
    if c in (LList, LListNoOwn):
        return (a.loc, a.items)
    if c is ChanOwn:
        return (a.endpoint,)
    if c is Trusted:
        return ()
    if c in (Sorted, Perm):
        return (a.out, a.inp)
    if c is Guard:
        return (a.cond,) + atom_terms(a.atom)
    raise TypeError("unknown atom %r" % a)


def subst_atom(a: Atom, env: Dict[str, LTerm]) -> Atom:
    c = a.__class__
    if c is PureP:
        return PureP(subst_term(a.term, env))
    if c is PointsTo:
        return PointsTo(subst_term(a.loc, env), subst_term(a.val, env))
    if c is LList:
        return LList(subst_term(a.loc, env), subst_term(a.items, env))
    if c is LListNoOwn:
        return LListNoOwn(subst_term(a.loc, env), subst_term(a.items, env))
    if c is ChanOwn:
        from . import ops
        return ChanOwn(subst_term(a.endpoint, env),
                       ops.subst_binders(a.proto, env))
    if c is Trusted:
        return a
    if c is Sorted:
        return Sorted(subst_term(a.out, env), subst_term(a.inp, env))
    if c is Perm:
        return Perm(subst_term(a.out, env), subst_term(a.inp, env))
    if c is Guard:
        return Guard(subst_term(a.cond, env), subst_atom(a.atom, env))
    raise TypeError("unknown atom %r" % a)


def fold_atom(a: Atom) -> Atom:
    c = a.__class__
    if c is PureP:
        return PureP(fold_term(a.term))
    if c is PointsTo:
        return PointsTo(fold_term(a.loc), fold_term(a.val))
    if c is LList:
        return LList(fold_term(a.loc), fold_term(a.items))
    if c is LListNoOwn:
        return LListNoOwn(fold_term(a.loc), fold_term(a.items))
    if c is ChanOwn:
        return ChanOwn(fold_term(a.endpoint), a.proto)
    if c is Trusted:
        return a
    if c is Sorted:
        return Sorted(fold_term(a.out), fold_term(a.inp))
    if c is Perm:
        return Perm(fold_term(a.out), fold_term(a.inp))
    if c is Guard:
        cond = fold_term(a.cond)
        if cond.__class__ is TLit and isinstance(cond.v, VBool):
            if cond.v.b:
                return fold_atom(a.atom)
            return PureP(TLit(TRUE))
        return Guard(cond, fold_atom(a.atom))
    raise TypeError("unknown atom %r" % a)


def subst_pred(p: Pred, env: Dict[str, LTerm]) -> Pred:
    return Pred(tuple(subst_atom(a, env) for a in p.atoms))


def fold_pred(p: Pred) -> Pred:
    out = []
    for a in p.atoms:
        f = fold_atom(a)
        if f.__class__ is PureP and f.term.__class__ is TLit \
                and isinstance(f.term.v, VBool) and f.term.v.b:
            continue  # drop literal truths
        out.append(f)
    return Pred(tuple(out))


def pred_free_vars(p: Pred, out: Optional[set] = None) -> set:
    if out is None:
        out = set()
    for a in p.atoms:
        for t in atom_terms(a):
            term_free_vars(t, out)
        if a.__class__ is ChanOwn:
            from . import ops
            out |= ops.free_binders(a.proto)
    return out


# Convenience constructors

def tint(n: int) -> LTerm:
    return TLit(VInt(n))


def tbool(b: bool) -> LTerm:
    return TLit(TRUE if b else FALSE)


def tunit() -> LTerm:
    return TLit(UNIT)


TRUE_TERM = TLit(TRUE)
FALSE_TERM = TLit(FALSE)
