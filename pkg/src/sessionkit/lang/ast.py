"""Core syntax of the concurrent functional language: values, expressions, heaps.

Values and expressions are kept as small slotted classes because the
interpreter walks them millions of times per run.  Expressions are immutable
after construction; the heap is the only mutable store.
"""

from __future__ import annotations

from typing import Iterator, Optional


class Value:
    """Base class for runtime values."""

    __slots__ = ()


class VUnit(Value):
    __slots__ = ()

    def __repr__(self) -> str:
        return "#()"


class VInt(Value):
    __slots__ = ("n",)

    def __init__(self, n: int):
        self.n = n

    def __repr__(self) -> str:
        return "#%d" % self.n


class VBool(Value):
    __slots__ = ("b",)

    def __init__(self, b: bool):
        self.b = b

    def __repr__(self) -> str:
        return "#true" if self.b else "#false"


class VLoc(Value):
    __slots__ = ("i",)

    def __init__(self, i: int):
        self.i = i

    def __repr__(self) -> str:
        return "loc(%d)" % self.i


class VPair(Value):
    __slots__ = ("a", "b")

    def __init__(self, a: Value, b: Value):
        self.a = a
        self.b = b

    def __repr__(self) -> str:
        return "(%r, %r)" % (self.a, self.b)


class VInj(Value):
    """Sum injection; which is 1 or 2."""

    __slots__ = ("which", "v")

    def __init__(self, which: int, v: Value):
        self.which = which
        self.v = v

    def __repr__(self) -> str:
        return "Inj%s %r" % (self.which, self.v)


class VClo(Value):
    """Recursive closure `rec f x := body`.

    The body is closed except for f and x (checked when the Rec expression
    steps, not here, so substitution can build intermediate closures freely).
    Anonymous binders are the name "_" and are never substituted.
    """

    __slots__ = ("f", "x", "body")

    def __init__(self, f: str, x: str, body: "Expr"):
        self.f = f
        self.x = x
        self.body = body

    def __repr__(self) -> str:
        return "<rec %s %s>" % (self.f, self.x)


UNIT = VUnit()
TRUE = VBool(True)
FALSE = VBool(False)


def value_eq(a: Value, b: Value) -> Optional[bool]:
    """Structural equality on comparable values.

    Returns None when the comparison is undefined (closures are opaque), which
    callers treat as a stuck program rather than guessing an answer.
    """
    ta = a.__class__
    tb = b.__class__
    if ta is VClo or tb is VClo:
        return None
    if ta is not tb:
        return False
    if ta is VInt:
        return a.n == b.n
    if ta is VBool:
        return a.b == b.b
    if ta is VLoc:
        return a.i == b.i
    if ta is VUnit:
        return True
    if ta is VPair:
        ea = value_eq(a.a, b.a)
        if ea is None:
            return None
        if not ea:
            return False
        return value_eq(a.b, b.b)
    if ta is VInj:
        if a.which != b.which:
            return False
        return value_eq(a.v, b.v)
    return None


class Expr:
    # _fv lazily caches the free-variable set; see free_vars below.
    __slots__ = ("_fv",)


class EVal(Expr):
    __slots__ = ("v",)

    def __init__(self, v: Value):
        self.v = v

    def __repr__(self) -> str:
        return repr(self.v)


class EVar(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __repr__(self) -> str:
        return self.name


class ERec(Expr):
    """`rec f x := body`; steps to a closure after a closedness check."""

    __slots__ = ("f", "x", "body")

    def __init__(self, f: str, x: str, body: Expr):
        self.f = f
        self.x = x
        self.body = body

    def __repr__(self) -> str:
        return "(rec: %s %s := %r)" % (self.f, self.x, self.body)


class EApp(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: Expr, arg: Expr):
        self.fn = fn
        self.arg = arg

    def __repr__(self) -> str:
        return "(%r %r)" % (self.fn, self.arg)


class EPair(Expr):
    __slots__ = ("a", "b")

    def __init__(self, a: Expr, b: Expr):
        self.a = a
        self.b = b

    def __repr__(self) -> str:
        return "(%r, %r)" % (self.a, self.b)


class EFst(Expr):
    __slots__ = ("e",)

    def __init__(self, e: Expr):
        self.e = e

    def __repr__(self) -> str:
        return "fst %r" % self.e


class ESnd(Expr):
    __slots__ = ("e",)

    def __init__(self, e: Expr):
        self.e = e

    def __repr__(self) -> str:
        return "snd %r" % self.e


class EIf(Expr):
    __slots__ = ("cond", "then", "els")

    def __init__(self, cond: Expr, then: Expr, els: Expr):
        self.cond = cond
        self.then = then
        self.els = els

    def __repr__(self) -> str:
        return "(if: %r then %r else %r)" % (self.cond, self.then, self.els)


class EInj(Expr):
    __slots__ = ("which", "e")

    def __init__(self, which: int, e: Expr):
        self.which = which
        self.e = e

    def __repr__(self) -> str:
        return "Inj%d %r" % (self.which, self.e)


class EMatch(Expr):
    """`match: e with InjL xl => el | InjR xr => er end`."""

    __slots__ = ("scrut", "xl", "el", "xr", "er")

    def __init__(self, scrut: Expr, xl: str, el: Expr, xr: str, er: Expr):
        self.scrut = scrut
        self.xl = xl
        self.el = el
        self.xr = xr
        self.er = er

    def __repr__(self) -> str:
        return "(match: %r with InjL %s => %r | InjR %s => %r end)" % (
            self.scrut, self.xl, self.el, self.xr, self.er)


class ERef(Expr):
    __slots__ = ("e",)

    def __init__(self, e: Expr):
        self.e = e

    def __repr__(self) -> str:
        return "ref %r" % self.e


class ELoad(Expr):
    __slots__ = ("e",)

    def __init__(self, e: Expr):
        self.e = e

    def __repr__(self) -> str:
        return "! %r" % self.e


class EStore(Expr):
    __slots__ = ("tgt", "val")

    def __init__(self, tgt: Expr, val: Expr):
        self.tgt = tgt
        self.val = val

    def __repr__(self) -> str:
        return "(%r <- %r)" % (self.tgt, self.val)


class ECAS(Expr):
    __slots__ = ("loc", "old", "new")

    def __init__(self, loc: Expr, old: Expr, new: Expr):
        self.loc = loc
        self.old = old
        self.new = new

    def __repr__(self) -> str:
        return "CAS %r %r %r" % (self.loc, self.old, self.new)


class EFork(Expr):
    __slots__ = ("e",)

    def __init__(self, e: Expr):
        self.e = e

    def __repr__(self) -> str:
        return "Fork { %r }" % self.e


class EBinOp(Expr):
    """Arithmetic/comparison operator; op in {+ - * = < <=}."""

    __slots__ = ("op", "l", "r")

    def __init__(self, op: str, l: Expr, r: Expr):
        self.op = op
        self.l = l
        self.r = r

    def __repr__(self) -> str:
        return "(%r %s %r)" % (self.l, self.op, self.r)


class EHook(Expr):
    """Monitor notification point; behaves like an n-ary primitive returning ().

    Arguments evaluate right to left like every other operator; once all are
    values the hook head-steps to unit and the run loop reports the event to
    its observer.  kind is one of new_chan/chan_label/send/recv.
    """

    __slots__ = ("kind", "label", "args")

    def __init__(self, kind: str, label: Optional[str], args: list):
        self.kind = kind
        self.label = label
        self.args = args

    def __repr__(self) -> str:
        return "__hook_%s(%s)" % (self.kind, ", ".join(repr(a) for a in self.args))


# Surface-only nodes: removed by desugar_select_branch before execution.

class ESelect(Expr):
    __slots__ = ("chan", "choice")

    def __init__(self, chan: Expr, choice: Expr):
        self.chan = chan
        self.choice = choice

    def __repr__(self) -> str:
        return "select %r %r" % (self.chan, self.choice)


class EBranch(Expr):
    __slots__ = ("chan", "left", "right")

    def __init__(self, chan: Expr, left: Expr, right: Expr):
        self.chan = chan
        self.left = left
        self.right = right

    def __repr__(self) -> str:
        return "branch %r { %r } { %r }" % (self.chan, self.left, self.right)


_NO_VARS: frozenset = frozenset()


def free_vars(e: Expr) -> frozenset:
    """Free variables of e, cached on the node.

    Nodes are immutable after construction, so the set is computed at most
    once per node; shared subtrees share the cache.
    """
    try:
        return e._fv
    except AttributeError:
        pass
    t = e.__class__
    if t is EVal:
        fv = _NO_VARS
    elif t is EVar:
        fv = _NO_VARS if e.name == "_" else frozenset((e.name,))
    elif t is ERec:
        fv = free_vars(e.body) - {e.f, e.x}
    elif t is EMatch:
        fv = (free_vars(e.scrut) | (free_vars(e.el) - {e.xl})
              | (free_vars(e.er) - {e.xr}))
    elif t is EHook:
        fv = _NO_VARS
        for a in e.args:
            fv = fv | free_vars(a)
    else:
        fv = _NO_VARS
        for slot in t.__slots__:
            child = getattr(e, slot)
            if isinstance(child, Expr):
                fv = fv | free_vars(child)
    e._fv = fv
    return fv


def substitute(e: Expr, x: str, v: Value) -> Expr:
    """Substitute value v for free occurrences of variable x in e.

    Values are closed, so no capture is possible and binders only matter for
    shadowing.  The anonymous binder "_" has no occurrences by construction.
    Subtrees without occurrences of x are shared, not copied.
    """
    if x == "_" or x not in free_vars(e):
        return e
    t = e.__class__
    if t is EVar:
        return EVal(v) if e.name == x else e
    if t is EVal:
        return e
    if t is EApp:
        fn = substitute(e.fn, x, v)
        arg = substitute(e.arg, x, v)
        if fn is e.fn and arg is e.arg:
            return e
        return EApp(fn, arg)
    if t is EBinOp:
        l = substitute(e.l, x, v)
        r = substitute(e.r, x, v)
        if l is e.l and r is e.r:
            return e
        return EBinOp(e.op, l, r)
    if t is ERec:
        if e.f == x or e.x == x:
            return e
        body = substitute(e.body, x, v)
        return e if body is e.body else ERec(e.f, e.x, body)
    if t is EPair:
        a = substitute(e.a, x, v)
        b = substitute(e.b, x, v)
        if a is e.a and b is e.b:
            return e
        return EPair(a, b)
    if t is EFst:
        s = substitute(e.e, x, v)
        return e if s is e.e else EFst(s)
    if t is ESnd:
        s = substitute(e.e, x, v)
        return e if s is e.e else ESnd(s)
    if t is EIf:
        c = substitute(e.cond, x, v)
        th = substitute(e.then, x, v)
        el = substitute(e.els, x, v)
        if c is e.cond and th is e.then and el is e.els:
            return e
        return EIf(c, th, el)
    if t is EInj:
        s = substitute(e.e, x, v)
        return e if s is e.e else EInj(e.which, s)
    if t is EMatch:
        sc = substitute(e.scrut, x, v)
        el = e.el if e.xl == x else substitute(e.el, x, v)
        er = e.er if e.xr == x else substitute(e.er, x, v)
        if sc is e.scrut and el is e.el and er is e.er:
            return e
        return EMatch(sc, e.xl, el, e.xr, er)
    if t is ERef:
        s = substitute(e.e, x, v)
        return e if s is e.e else ERef(s)
    if t is ELoad:
        s = substitute(e.e, x, v)
        return e if s is e.e else ELoad(s)
    if t is EStore:
        tg = substitute(e.tgt, x, v)
        vl = substitute(e.val, x, v)
        if tg is e.tgt and vl is e.val:
            return e
        return EStore(tg, vl)
    if t is ECAS:
        lo = substitute(e.loc, x, v)
        ol = substitute(e.old, x, v)
        nw = substitute(e.new, x, v)
        if lo is e.loc and ol is e.old and nw is e.new:
            return e
        return ECAS(lo, ol, nw)
    if t is EFork:
        s = substitute(e.e, x, v)
        return e if s is e.e else EFork(s)
    if t is EHook:
        args = [substitute(a, x, v) for a in e.args]
        if all(a is b for a, b in zip(args, e.args)):
            return e
        return EHook(e.kind, e.label, args)
    if t is ESelect:
        ch = substitute(e.chan, x, v)
        co = substitute(e.choice, x, v)
        if ch is e.chan and co is e.choice:
            return e
        return ESelect(ch, co)
    if t is EBranch:
        ch = substitute(e.chan, x, v)
        lf = substitute(e.left, x, v)
        rt = substitute(e.right, x, v)
        if ch is e.chan and lf is e.left and rt is e.right:
            return e
        return EBranch(ch, lf, rt)
    raise TypeError("substitute: unknown expression %r" % e)


def as_value(e: Expr) -> Optional[Value]:
    """The Value denoted by a value-form expression, or None.

    Pairs and injections of value forms are themselves values, as is a
    recursion literal; no step is consumed turning them into Values.
    """
    t = e.__class__
    if t is EVal:
        return e.v
    if t is ERec:
        return VClo(e.f, e.x, e.body)
    if t is EPair:
        a = as_value(e.a)
        if a is None:
            return None
        b = as_value(e.b)
        if b is None:
            return None
        return VPair(a, b)
    if t is EInj:
        v = as_value(e.e)
        if v is None:
            return None
        return VInj(e.which, v)
    return None


def subexprs(e: Expr) -> Iterator[Expr]:
    """Immediate subexpressions, in syntactic (left-to-right) order."""
    t = e.__class__
    if t is EApp:
        yield e.fn
        yield e.arg
    elif t is EBinOp:
        yield e.l
        yield e.r
    elif t is EPair:
        yield e.a
        yield e.b
    elif t in (EFst, ESnd, EInj, ERef, ELoad, EFork):
        yield e.e
    elif t is EIf:
        yield e.cond
        yield e.then
        yield e.els
    elif t is EMatch:
        yield e.scrut
        yield e.el
        yield e.er
    elif t is EStore:
        yield e.tgt
        yield e.val
    elif t is ECAS:
        yield e.loc
        yield e.old
        yield e.new
    elif t is ERec:
        yield e.body
    elif t is EHook:
        yield from e.args
    elif t is ESelect:
        yield e.chan
        yield e.choice
    elif t is EBranch:
        yield e.chan
        yield e.left
        yield e.right


class Heap:
    """Mutable store mapping location indices to values.

    Nothing is ever deallocated (the language is garbage collected), so the
    least unused index is a monotone counter.
    """

    __slots__ = ("cells", "_next")

    def __init__(self):
        self.cells: dict = {}
        self._next = 0

    def alloc(self, v: Value) -> int:
        i = self._next
        self.cells[i] = v
        self._next = i + 1
        return i

    def __len__(self) -> int:
        return len(self.cells)
