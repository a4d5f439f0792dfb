"""Ground-model reference for the subprotocol relation.

Works on the finite fragment: no unbounded recursion, binders over finite
sorts (booleans and enumerated integer sorts), and payloads that evaluate to
ground truths once binders are filled in.  Each protocol is expanded into a
tree of concrete send/receive alternatives and the relation is decided
directly on the trees:

  * finished vs finished holds;
  * send vs send: every value the coarse side may send must be permitted
    by the fine side, with related continuations;
  * receive vs receive: every value the fine side may deliver must be
    expected by the coarse side, with related continuations;
  * receive vs send: the demanded send must be extractable from behind the
    fine side's receives in every receive branch (the sent value cannot
    depend on what is received);
  * send vs receive never holds.

This module deliberately shares no code with the syntactic checker; it is
the oracle the checker is validated against on random instances.
"""

from __future__ import annotations

from typing import Dict, Optional, Tuple

from .protocol.ast import Cond, End, Msg, Protocol
from .protocol.ops import normalize_head, subst_binders
from .protocol.terms import (
    BoolS, FinS, TLit, eval_term, subst_term, sval_repr,
)
from .lang.ast import VBool, TRUE, FALSE


class BruteUnsupported(Exception):
    """The protocol falls outside the finite ground fragment."""


# Tree: ("end",) | (action, {value_key: (value, subtree)})

def _domain(sort):
    if isinstance(sort, BoolS):
        return [TRUE, FALSE]
    if isinstance(sort, FinS):
        return list(sort.values)
    raise BruteUnsupported("binder sort %r is not finite" % (sort,))


def expand(p: Protocol, depth: int = 64):
    """Expand a finite protocol into its ground action tree."""
    if depth <= 0:
        raise BruteUnsupported("expansion too deep")
    p, _ = normalize_head(p, max_unfold=depth)
    c = p.__class__
    if c is End:
        return ("end",)
    if c is Cond:
        raise BruteUnsupported("undecided conditional %r" % (p.cond,))
    assert c is Msg
    branches: Dict[str, tuple] = {}
    for env in _assignments(p.binders):
        ok = True
        for atom in p.payload.atoms:
            holds = _ground_atom(atom, env)
            if holds is None:
                raise BruteUnsupported("payload %r is not ground" % (atom,))
            if not holds:
                ok = False  # branch can never be used
                break
        if not ok:
            continue
        val = eval_term(subst_term(p.value, env), None)
        if val is None:
            raise BruteUnsupported("value %r is not ground" % (p.value,))
        tail = subst_binders(p.tail, env) if env else p.tail
        branches[sval_repr(val)] = (val, expand(tail, depth - 1))
    return (p.action, branches)


def _assignments(binders):
    envs = [{}]
    for name, sort in binders:
        dom = _domain(sort)
        envs = [dict(e, **{name: TLit(v)}) for e in envs for v in dom]
    return envs


def _ground_atom(atom, env) -> Optional[bool]:
    from .protocol.terms import PureP, Guard, subst_atom
    a = subst_atom(atom, env)
    if a.__class__ is Guard:
        cv = eval_term(a.cond, None)
        if not isinstance(cv, VBool):
            return None
        if not cv.b:
            return True
        return _ground_atom(a.atom, {})
    if a.__class__ is PureP:
        v = eval_term(a.term, None)
        if isinstance(v, VBool):
            return v.b
        return None
    return None


def _pull(tree, key) -> Optional[tuple]:
    """Commit to sending `key` now; None when some receive branch cannot."""
    tag = tree[0]
    if tag == "!":
        hit = tree[1].get(key)
        return None if hit is None else hit[1]
    if tag == "?":
        out = {}
        for k, (v, sub) in tree[1].items():
            pulled = _pull(sub, key)
            if pulled is None:
                return None
            out[k] = (v, pulled)
        return ("?", out)
    return None


def _rel(t1, t2, memo) -> bool:
    key = (id(t1), id(t2))
    hit = memo.get(key)
    if hit is not None:
        return hit
    memo[key] = True  # harmless: trees are finite, cycles impossible
    tag1, tag2 = t1[0], t2[0]
    if tag1 == "end" and tag2 == "end":
        out = True
    elif tag1 == "!" and tag2 == "!":
        out = all(k in t1[1] and _rel(t1[1][k][1], sub, memo)
                  for k, (_, sub) in t2[1].items())
    elif tag1 == "?" and tag2 == "?":
        out = all(k in t2[1] and _rel(sub, t2[1][k][1], memo)
                  for k, (_, sub) in t1[1].items())
    elif tag1 == "?" and tag2 == "!":
        out = True
        for k, (_, sub) in t2[1].items():
            pulled = _pull(t1, k)
            if pulled is None or not _rel(pulled, sub, memo):
                out = False
                break
    else:
        out = False
    memo[key] = out
    return out


def brute_subprot(p1: Protocol, p2: Protocol, depth: int = 64) -> bool:
    """Decide the relation on the ground trees of two finite protocols."""
    t1 = expand(p1, depth)
    t2 = expand(p2, depth)
    return _rel(t1, t2, {})
