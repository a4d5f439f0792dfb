"""Independent reference implementations used to cross-check the package.

Everything in this module is written the slow, obvious way and shares only
the syntax-tree classes with the package under test.  Semantics (stepping,
decomposition, hashing, random streams, list/protocol operations) are
re-derived here from first principles so the test suite compares two
independently produced answers.
"""

from __future__ import annotations

import itertools
from collections import Counter

from sessionkit.lang.ast import (
    EApp, EBinOp, ECAS, EFork, EFst, EHook, EIf, EInj, ELoad,
    EMatch, EPair, ERec, ERef, ESnd, EStore, EVal, EVar, Expr,
    FALSE, TRUE, UNIT, VBool, VClo, VInj, VInt, VLoc, VPair,
    substitute, value_eq,
)

MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# splitmix64 reference (transcribed from the published algorithm)

def ref_splitmix64_stream(seed: int, n: int) -> list:
    out = []
    state = seed & MASK64
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        z = z ^ (z >> 31)
        out.append(z)
    return out


# Widely published first output for seed 0; guards against transcription slips.
SPLITMIX64_SEED0_FIRST = 0xE220A8397B1DCDAF


# ---------------------------------------------------------------------------
# 64-bit FNV-1a over a word stream (batch version, for checking the streaming
# hash in the interpreter)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def ref_fnv1a_words(words) -> int:
    h = FNV_OFFSET
    for w in words:
        h = ((h ^ (w & MASK64)) * FNV_PRIME) & MASK64
    return h


# ---------------------------------------------------------------------------
# Naive small-step interpreter: its own value test, decomposition and head
# rules.  Heaps are plain dicts; the fresh location is re-derived as the
# least natural number not present.

class OracleStuck(Exception):
    pass


def o_to_value(e: Expr):
    """Return the Value e denotes if e is a value form, else None."""
    t = e.__class__
    if t is EVal:
        return e.v
    if t is ERec:
        return VClo(e.f, e.x, e.body)
    if t is EPair:
        a = o_to_value(e.a)
        if a is None:
            return None
        b = o_to_value(e.b)
        if b is None:
            return None
        return VPair(a, b)
    if t is EInj:
        v = o_to_value(e.e)
        if v is None:
            return None
        return VInj(e.which, v)
    return None


def o_decompose(e: Expr):
    """Split e into (plug, redex) following right-to-left evaluation order.

    Returns None when e is a value form.  plug is a function rebuilding the
    whole expression from a replacement for the redex.
    """
    if o_to_value(e) is not None:
        return None
    t = e.__class__

    def descend(sub, rebuild):
        inner = o_decompose(sub)
        if inner is None:
            return None
        plug, redex = inner
        return (lambda r: rebuild(plug(r))), redex

    if t is EVar:
        return (lambda r: r), e  # unbound variable: a stuck "redex"
    if t is EApp:
        if o_to_value(e.arg) is None:
            return descend(e.arg, lambda s: EApp(e.fn, s))
        if o_to_value(e.fn) is None:
            return descend(e.fn, lambda s: EApp(s, e.arg))
        return (lambda r: r), e
    if t is EBinOp:
        if o_to_value(e.r) is None:
            return descend(e.r, lambda s: EBinOp(e.op, e.l, s))
        if o_to_value(e.l) is None:
            return descend(e.l, lambda s: EBinOp(e.op, s, e.r))
        return (lambda r: r), e
    if t is EPair:
        if o_to_value(e.b) is None:
            return descend(e.b, lambda s: EPair(e.a, s))
        return descend(e.a, lambda s: EPair(s, e.b))
    if t is EFst:
        d = descend(e.e, lambda s: EFst(s))
        return d if d is not None else ((lambda r: r), e)
    if t is ESnd:
        d = descend(e.e, lambda s: ESnd(s))
        return d if d is not None else ((lambda r: r), e)
    if t is EIf:
        d = descend(e.cond, lambda s: EIf(s, e.then, e.els))
        return d if d is not None else ((lambda r: r), e)
    if t is EInj:
        return descend(e.e, lambda s: EInj(e.which, s))
    if t is EMatch:
        d = descend(e.scrut, lambda s: EMatch(s, e.xl, e.el, e.xr, e.er))
        return d if d is not None else ((lambda r: r), e)
    if t is ERef:
        d = descend(e.e, lambda s: ERef(s))
        return d if d is not None else ((lambda r: r), e)
    if t is ELoad:
        d = descend(e.e, lambda s: ELoad(s))
        return d if d is not None else ((lambda r: r), e)
    if t is EStore:
        if o_to_value(e.val) is None:
            return descend(e.val, lambda s: EStore(e.tgt, s))
        if o_to_value(e.tgt) is None:
            return descend(e.tgt, lambda s: EStore(s, e.val))
        return (lambda r: r), e
    if t is ECAS:
        if o_to_value(e.new) is None:
            return descend(e.new, lambda s: ECAS(e.loc, e.old, s))
        if o_to_value(e.old) is None:
            return descend(e.old, lambda s: ECAS(e.loc, s, e.new))
        if o_to_value(e.loc) is None:
            return descend(e.loc, lambda s: ECAS(s, e.old, e.new))
        return (lambda r: r), e
    if t is EFork:
        return (lambda r: r), e
    if t is EHook:
        for i in range(len(e.args) - 1, -1, -1):
            if o_to_value(e.args[i]) is None:
                def rebuild(s, i=i):
                    args = list(e.args)
                    args[i] = s
                    return EHook(e.kind, e.label, args)
                return descend(e.args[i], rebuild)
        return (lambda r: r), e
    raise OracleStuck("oracle cannot decompose %r" % e)


def o_least_free(heap: dict) -> int:
    i = 0
    while i in heap:
        i += 1
    return i


def o_head_step(e: Expr, heap: dict):
    """Reduce the head redex e.  Returns (e', spawned_exprs, events).

    heap is mutated.  Raises OracleStuck when no rule applies.  Events are
    (kind, payload) pairs with the hook kinds plus heap effects.
    """
    t = e.__class__
    if t is EVar:
        raise OracleStuck("unbound variable %s" % e.name)
    if t is EApp:
        vf = o_to_value(e.fn)
        va = o_to_value(e.arg)
        if not isinstance(vf, VClo):
            raise OracleStuck("apply non-closure")
        body = substitute(vf.body, vf.x, va)
        body = substitute(body, vf.f, vf)
        return body, [], []
    if t is EBinOp:
        lv = o_to_value(e.l)
        rv = o_to_value(e.r)
        op = e.op
        if op in ("+", "-", "*"):
            if not (isinstance(lv, VInt) and isinstance(rv, VInt)):
                raise OracleStuck("arith on non-int")
            n = lv.n + rv.n if op == "+" else (lv.n - rv.n if op == "-" else lv.n * rv.n)
            return EVal(VInt(n)), [], []
        if op in ("<", "<="):
            if not (isinstance(lv, VInt) and isinstance(rv, VInt)):
                raise OracleStuck("compare non-int")
            return EVal(TRUE if (lv.n < rv.n if op == "<" else lv.n <= rv.n) else FALSE), [], []
        if op == "=":
            r = value_eq(lv, rv)
            if r is None:
                raise OracleStuck("= on incomparable values")
            return EVal(TRUE if r else FALSE), [], []
        raise OracleStuck("unknown op %s" % op)
    if t is EFst:
        v = o_to_value(e.e)
        if not isinstance(v, VPair):
            raise OracleStuck("fst of non-pair")
        return EVal(v.a), [], []
    if t is ESnd:
        v = o_to_value(e.e)
        if not isinstance(v, VPair):
            raise OracleStuck("snd of non-pair")
        return EVal(v.b), [], []
    if t is EIf:
        v = o_to_value(e.cond)
        if not isinstance(v, VBool):
            raise OracleStuck("if on non-bool")
        return (e.then if v.b else e.els), [], []
    if t is EMatch:
        v = o_to_value(e.scrut)
        if not isinstance(v, VInj):
            raise OracleStuck("match on non-injection")
        if v.which == 1:
            return substitute(e.el, e.xl, v.v), [], []
        return substitute(e.er, e.xr, v.v), [], []
    if t is ERef:
        v = o_to_value(e.e)
        loc = o_least_free(heap)
        heap[loc] = v
        return EVal(VLoc(loc)), [], [("alloc", loc)]
    if t is ELoad:
        v = o_to_value(e.e)
        if not isinstance(v, VLoc) or v.i not in heap:
            raise OracleStuck("load from bad location")
        return EVal(heap[v.i]), [], [("load", v.i)]
    if t is EStore:
        lv = o_to_value(e.tgt)
        vv = o_to_value(e.val)
        if not isinstance(lv, VLoc) or lv.i not in heap:
            raise OracleStuck("store to bad location")
        heap[lv.i] = vv
        return EVal(UNIT), [], [("store", lv.i)]
    if t is ECAS:
        lv = o_to_value(e.loc)
        ov = o_to_value(e.old)
        nv = o_to_value(e.new)
        if not isinstance(lv, VLoc) or lv.i not in heap:
            raise OracleStuck("cas on bad location")
        r = value_eq(heap[lv.i], ov)
        if r is None:
            raise OracleStuck("cas on incomparable values")
        if r:
            heap[lv.i] = nv
        return EVal(TRUE if r else FALSE), [], [("cas", lv.i, r)]
    if t is EFork:
        return EVal(UNIT), [e.e], [("fork",)]
    if t is EHook:
        vals = [o_to_value(a) for a in e.args]
        return EVal(UNIT), [], [(e.kind, e.label, vals)]
    raise OracleStuck("no head rule for %r" % e)


def o_thread_step(threads: list, heap: dict, i: int):
    """Step thread i once.  Returns 'value' if it is already a value form,
    'stuck' when no step applies, or 'ok'.  threads and heap are mutated."""
    e = threads[i]
    d = o_decompose(e)
    if d is None:
        return "value"
    plug, redex = d
    try:
        e2, spawned, _events = o_head_step(redex, heap)
    except OracleStuck:
        return "stuck"
    threads[i] = plug(e2)
    threads.extend(spawned)
    return "ok"


def o_run_single(e: Expr, max_steps: int = 100000):
    """Run a program that never forks; returns (value, heap)."""
    threads = [e]
    heap: dict = {}
    for _ in range(max_steps):
        st = o_thread_step(threads, heap, 0)
        if st == "value":
            return o_to_value(threads[0]), heap
        if st == "stuck":
            raise OracleStuck(repr(threads[0]))
        if len(threads) > 1:
            raise AssertionError("o_run_single used on a forking program")
    raise AssertionError("o_run_single out of fuel")


def o_all_final_values(e: Expr, max_states: int = 300000):
    """Set of main-thread final values over every interleaving.

    Explores the full scheduling tree of a small program by depth-first
    search.  States are keyed on (threads, heap) renderings.  Only suitable
    for tiny programs; raises if the state bound is exceeded.
    """
    results = set()
    seen = set()
    counter = itertools.count()

    def key(threads, heap):
        return (tuple(repr(t) for t in threads),
                tuple(sorted((k, repr(v)) for k, v in heap.items())))

    def go(threads, heap):
        if next(counter) > max_states:
            raise AssertionError("o_all_final_values exceeded state bound")
        k = key(threads, heap)
        if k in seen:
            return
        seen.add(k)
        main_v = o_to_value(threads[0])
        if main_v is not None:
            results.add(repr(main_v))
            return
        progressed = False
        for i in range(len(threads)):
            if o_to_value(threads[i]) is not None:
                continue
            ts = list(threads)
            hp = dict(heap)
            st = o_thread_step(ts, hp, i)
            if st == "ok":
                progressed = True
                go(ts, hp)
        if not progressed:
            results.add("<deadlock-or-stuck>")

    go([e], {})
    return results


# ---------------------------------------------------------------------------
# Pure functional references for sorting / mapping / map-reduce

def ref_is_sorted(xs) -> bool:
    return all(xs[i] <= xs[i + 1] for i in range(len(xs) - 1))


def ref_is_perm(xs, ys) -> bool:
    return Counter(xs) == Counter(ys)


def ref_flat_map(f, xs):
    out = []
    for x in xs:
        out.extend(f(x))
    return out


def ref_group(pairs):
    """Group a list of (key, value) pairs by key, keys in ascending order.

    Values within a group keep their first-appearance order, matching a
    stable sort on keys followed by grouping of equal neighbours.
    """
    ordered = sorted(pairs, key=lambda kv: kv[0])
    out = []
    for k, vs in itertools.groupby(ordered, key=lambda kv: kv[0]):
        out.append((k, [v for _, v in vs]))
    return out


def ref_map_reduce(f, g, xs):
    return ref_flat_map(g, ref_group(ref_flat_map(f, xs)))


def ref_word_count(words):
    return ref_map_reduce(lambda x: [(x, 1)],
                          lambda kg: [(kg[0], sum(kg[1]))],
                          words)


# ---------------------------------------------------------------------------
# Protocol action-trace oracles.  These expand a finite protocol into the
# tree of ground actions it allows and implement duality/append directly on
# that tree, independently of the package's structural definitions.
#
# They import lazily so this module stays usable before the protocol package
# exists during bootstrapping.

def o_proto_actions(p, depth: int):
    """Finite action tree of a protocol, cut off at the given depth.

    Nodes: ('end',), ('cut',) for the depth horizon, or
    ('msg', action, binder_sorts, value_repr, payload_repr, child).
    Mu-free protocols only need depth >= their size.
    """
    from sessionkit.protocol import ast as P
    from sessionkit.protocol import printer as PP

    if depth <= 0:
        return ("cut",)
    if isinstance(p, P.End):
        return ("end",)
    if isinstance(p, P.Msg):
        child = o_proto_actions(p.tail, depth - 1)
        sorts = tuple(s.__class__.__name__ for _, s in p.binders)
        return ("msg", p.action, sorts,
                PP.print_term(p.value), PP.print_pred(p.payload), child)
    if isinstance(p, (P.Mu, P.RecVar, P.Cond)):
        from sessionkit.protocol import ops as OPS
        q, _ = OPS.normalize_head(p)
        if q is p:
            raise AssertionError("oracle cannot expand %r" % p)
        return o_proto_actions(q, depth)
    raise AssertionError("unknown protocol node %r" % p)


def o_dual_actions(tree):
    """Duality on an action tree: flip every send/receive marker."""
    if tree[0] != "msg":
        return tree
    flip = "?" if tree[1] == "!" else "!"
    return ("msg", flip) + tree[2:5] + (o_dual_actions(tree[5]),)


def o_append_actions(left, right):
    """Sequencing on action trees: graft right onto every 'end' leaf."""
    if left == ("end",):
        return right
    if left[0] != "msg":
        return left
    return left[:5] + (o_append_actions(left[5], right),)
