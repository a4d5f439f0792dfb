"""Structural operations on protocols.

Substitution here is capture-avoiding: message binders and recursion
parameters are freshened whenever a substituted term could be captured.
Recursion is unrolled by re-tying the knot: a recursive reference becomes a
copy of its binder with the reference's arguments as the new initial values.
"""

from __future__ import annotations

import itertools
from typing import Dict, Optional, Set, Tuple

from ..lang.ast import VBool
from .ast import Cond, End, Msg, Mu, Protocol, RecVar
from .terms import (
    BOOL, ChanOwn, Guard, LTerm, Pred, PureP, Sort, TLit, TVar,
    atom_terms, eval_term, fold_term, pred_free_vars, subst_pred, subst_term,
    term_eq, term_free_vars,
)


class ProtocolError(ValueError):
    pass


class OpenAppend(ProtocolError):
    """Raised when appending a protocol with free recursion references."""


_fresh_counter = itertools.count(1)


def _fresh(base: str) -> str:
    return "%s~%d" % (base.split("~")[0], next(_fresh_counter))


# ---------------------------------------------------------------------------
# Free variables

def free_binders(p: Protocol, bound: frozenset = frozenset(),
                 out: Optional[Set[str]] = None) -> Set[str]:
    """Free term-variable names of a protocol."""
    if out is None:
        out = set()
    t = p.__class__
    if t is End:
        return out
    if t is Msg:
        inner = bound | {n for n, _ in p.binders}
        out |= term_free_vars(p.value) - inner
        out |= _pred_frees(p.payload) - inner
        free_binders(p.tail, inner, out)
        return out
    if t is Mu:
        for _, _, init in p.params:
            out |= term_free_vars(init) - bound
        inner = bound | {n for n, _, _ in p.params}
        free_binders(p.body, inner, out)
        return out
    if t is RecVar:
        for a in p.args:
            out |= term_free_vars(a) - bound
        return out
    if t is Cond:
        out |= term_free_vars(p.cond) - bound
        free_binders(p.then, bound, out)
        free_binders(p.els, bound, out)
        return out
    raise TypeError("unknown protocol node %r" % p)


def _pred_frees(pred: Pred) -> Set[str]:
    out: Set[str] = set()
    for a in pred.atoms:
        for tm in atom_terms(a):
            term_free_vars(tm, out)
        base = a
        while base.__class__ is Guard:
            base = base.atom
        if base.__class__ is ChanOwn:
            out |= free_binders(base.proto)
    return out


def free_rec_vars(p: Protocol, bound: frozenset = frozenset(),
                  out: Optional[Set[str]] = None) -> Set[str]:
    """Free recursion names of a protocol."""
    if out is None:
        out = set()
    t = p.__class__
    if t is End:
        return out
    if t is Msg:
        free_rec_vars(p.tail, bound, out)
        for a in _chanown_atoms(p.payload):
            free_rec_vars(a.proto, bound, out)
        return out
    if t is Mu:
        free_rec_vars(p.body, bound | {p.name}, out)
        return out
    if t is RecVar:
        if p.name not in bound:
            out.add(p.name)
        return out
    if t is Cond:
        free_rec_vars(p.then, bound, out)
        free_rec_vars(p.els, bound, out)
        return out
    raise TypeError("unknown protocol node %r" % p)


def _chanown_atoms(pred: Pred):
    for a in pred.atoms:
        base = a
        while base.__class__ is Guard:
            base = base.atom
        if base.__class__ is ChanOwn:
            yield base


# ---------------------------------------------------------------------------
# Term substitution into protocols (capture-avoiding)

def subst_binders(p: Protocol, env: Dict[str, LTerm]) -> Protocol:
    """Substitute terms for free term variables throughout a protocol."""
    if not env:
        return p
    t = p.__class__
    if t is End:
        return p
    if t is Msg:
        inner_env = {k: v for k, v in env.items()
                     if k not in {n for n, _ in p.binders}}
        clash = _clashes({n for n, _ in p.binders}, inner_env)
        binders = p.binders
        value, payload, tail = p.value, p.payload, p.tail
        if clash:
            ren = {n: TVar(_fresh(n)) for n in clash}
            binders = tuple((ren[n].name if n in ren else n, s)
                            for n, s in binders)
            value = subst_term(value, ren)
            payload = subst_pred(payload, ren)
            tail = subst_binders(tail, ren)
        return Msg(p.action, binders,
                   subst_term(value, inner_env),
                   subst_pred(payload, inner_env),
                   subst_binders(tail, inner_env))
    if t is Mu:
        params = tuple((n, s, subst_term(init, env)) for n, s, init in p.params)
        inner_env = {k: v for k, v in env.items()
                     if k not in {n for n, _, _ in p.params}}
        clash = _clashes({n for n, _, _ in p.params}, inner_env)
        body = p.body
        if clash:
            ren = {n: TVar(_fresh(n)) for n in clash}
            params = tuple((ren[n].name if n in ren else n, s, init)
                           for n, s, init in params)
            body = subst_binders(body, ren)
        if not inner_env:
            return Mu(p.name, params, body)
        return Mu(p.name, params, subst_binders(body, inner_env))
    if t is RecVar:
        return RecVar(p.name, tuple(subst_term(a, env) for a in p.args))
    if t is Cond:
        return Cond(subst_term(p.cond, env),
                    subst_binders(p.then, env),
                    subst_binders(p.els, env))
    raise TypeError("unknown protocol node %r" % p)


def _clashes(binder_names: Set[str], env: Dict[str, LTerm]) -> Set[str]:
    if not env:
        return set()
    value_frees: Set[str] = set()
    for v in env.values():
        term_free_vars(v, value_frees)
    return binder_names & value_frees


# ---------------------------------------------------------------------------
# Duality and sequencing

def dual(p: Protocol) -> Protocol:
    """Swap the direction of every message.  Transferred-endpoint protocols
    inside payloads describe the endpoint itself and are left alone."""
    t = p.__class__
    if t is End or t is RecVar:
        return p
    if t is Msg:
        return Msg("?" if p.action == "!" else "!", p.binders, p.value,
                   p.payload, dual(p.tail))
    if t is Mu:
        return Mu(p.name, p.params, dual(p.body))
    if t is Cond:
        return Cond(p.cond, dual(p.then), dual(p.els))
    raise TypeError("unknown protocol node %r" % p)


def _splice(p: Protocol, q: Protocol) -> Protocol:
    """Replace every End leaf of p with q.  No closedness checks; q's free
    recursion names are deliberately capturable (used to build loops)."""
    t = p.__class__
    if t is End:
        return q
    if t is Msg:
        return Msg(p.action, p.binders, p.value, p.payload, _splice(p.tail, q))
    if t is Mu:
        return Mu(p.name, p.params, _splice(p.body, q))
    if t is RecVar:
        return p
    if t is Cond:
        return Cond(p.cond, _splice(p.then, q), _splice(p.els, q))
    raise TypeError("unknown protocol node %r" % p)


def append(p: Protocol, q: Protocol) -> Protocol:
    """Sequential composition: q runs after p completes."""
    open_names = free_rec_vars(q)
    if open_names:
        raise OpenAppend("cannot append a protocol with free recursion "
                         "references: %s" % ", ".join(sorted(open_names)))
    return _splice(p, q)


# ---------------------------------------------------------------------------
# Unfolding and head normalization

def unfold(p: Protocol) -> Protocol:
    """One unrolling of a recursive protocol.

    Recursive references inside the body become fresh copies of the binder
    whose initial values are the reference's arguments; then the current
    parameter values are substituted through the body.  Ground terms are
    folded afterwards so repeated unrollings stay in a canonical form.
    """
    if p.__class__ is not Mu:
        raise ProtocolError("unfold expects a recursive protocol")
    theta = {name: init for name, _, init in p.params}
    tied = _tie(p.body, p)
    return fold_protocol(subst_binders(tied, theta))


def fold_protocol(p: Protocol) -> Protocol:
    """Constant-fold every term slot of a protocol."""
    from .terms import fold_atom, fold_pred
    t = p.__class__
    if t is End:
        return p
    if t is Msg:
        return Msg(p.action, p.binders, fold_term(p.value),
                   fold_pred_keep_chanown(p.payload), fold_protocol(p.tail))
    if t is Mu:
        return Mu(p.name,
                  tuple((n, s, fold_term(i)) for n, s, i in p.params),
                  fold_protocol(p.body))
    if t is RecVar:
        return RecVar(p.name, tuple(fold_term(a) for a in p.args))
    if t is Cond:
        from .terms import eval_term as _ev
        c = fold_term(p.cond)
        cv = _ev(c, None)
        if isinstance(cv, VBool):
            return fold_protocol(p.then if cv.b else p.els)
        return Cond(c, fold_protocol(p.then), fold_protocol(p.els))
    raise TypeError("unknown protocol node %r" % p)


def fold_pred_keep_chanown(pred: Pred) -> Pred:
    """fold_pred, additionally folding protocols nested under chanown."""
    from .terms import fold_pred
    folded = fold_pred(pred)
    atoms = []
    for a in folded.atoms:
        if a.__class__ is ChanOwn:
            atoms.append(ChanOwn(a.endpoint, fold_protocol(a.proto)))
        else:
            atoms.append(a)
    return Pred(tuple(atoms))


def _tie(body: Protocol, mu: Mu) -> Protocol:
    t = body.__class__
    if t is End:
        return body
    if t is Msg:
        payload = body.payload
        atoms = tuple(payload.atoms)
        new_atoms = []
        changed = False
        for a in atoms:
            na = _tie_atom(a, mu)
            changed = changed or na is not a
            new_atoms.append(na)
        return Msg(body.action, body.binders, body.value,
                   Pred(tuple(new_atoms)) if changed else payload,
                   _tie(body.tail, mu))
    if t is Mu:
        if body.name == mu.name:
            return body  # inner binder shadows; references inside are its own
        return Mu(body.name, body.params, _tie(body.body, mu))
    if t is RecVar:
        if body.name != mu.name:
            return body
        if len(body.args) != len(mu.params):
            raise ProtocolError(
                "recursion %s used with %d arguments, declared with %d"
                % (mu.name, len(body.args), len(mu.params)))
        params = tuple((n, s, arg)
                       for (n, s, _), arg in zip(mu.params, body.args))
        return Mu(mu.name, params, mu.body)
    if t is Cond:
        return Cond(body.cond, _tie(body.then, mu), _tie(body.els, mu))
    raise TypeError("unknown protocol node %r" % body)


def _tie_atom(a, mu: Mu):
    if a.__class__ is Guard:
        inner = _tie_atom(a.atom, mu)
        return a if inner is a.atom else Guard(a.cond, inner)
    if a.__class__ is ChanOwn:
        tied = _tie(a.proto, mu)
        return a if tied is a.proto else ChanOwn(a.endpoint, tied)
    return a


def normalize_head(p: Protocol, max_unfold: int = 512
                   ) -> Tuple[Protocol, int]:
    """Unfold recursion and resolve ground conditionals until the protocol
    starts with End, a message, or a conditional it cannot decide.

    Returns (head_normal_protocol, unfold_steps_used).
    """
    steps = 0
    while True:
        t = p.__class__
        if t is End or t is Msg:
            return p, steps
        if t is Mu:
            if steps >= max_unfold:
                raise ProtocolError("recursion does not reach a message "
                                    "within %d unrollings" % max_unfold)
            p = unfold(p)
            steps += 1
            continue
        if t is Cond:
            c = eval_term(fold_term(p.cond), None)
            if isinstance(c, VBool):
                p = p.then if c.b else p.els
                continue
            return p, steps  # undecided conditional: callers handle
        if t is RecVar:
            raise ProtocolError("unbound recursion reference %s" % p.name)
        raise TypeError("unknown protocol node %r" % p)


# ---------------------------------------------------------------------------
# Alpha-equivalence and canonical keys

def alpha_eq(p: Protocol, q: Protocol) -> bool:
    return canon_key(p) == canon_key(q)


def canon_key(p: Protocol):
    """Hashable structure identifying p up to bound-name renaming."""
    return _canon(p, {}, {}, [0])


def _canon(p: Protocol, tenv: Dict[str, int], renv: Dict[str, int],
           counter) -> tuple:
    t = p.__class__
    if t is End:
        return ("end",)
    if t is Msg:
        inner = dict(tenv)
        bsorts = []
        for name, sort in p.binders:
            counter[0] += 1
            inner[name] = counter[0]
            bsorts.append(repr(sort))
        return ("msg", p.action, tuple(bsorts),
                _canon_term(p.value, inner),
                _canon_pred(p.payload, inner, renv, counter),
                _canon(p.tail, inner, renv, counter))
    if t is Mu:
        inits = tuple(_canon_term(init, tenv) for _, _, init in p.params)
        inner = dict(tenv)
        sorts = []
        for name, sort, _ in p.params:
            counter[0] += 1
            inner[name] = counter[0]
            sorts.append(repr(sort))
        renv2 = dict(renv)
        counter[0] += 1
        renv2[p.name] = counter[0]
        return ("mu", tuple(sorts), inits,
                _canon(p.body, inner, renv2, counter))
    if t is RecVar:
        return ("rec", renv.get(p.name, p.name),
                tuple(_canon_term(a, tenv) for a in p.args))
    if t is Cond:
        return ("cond", _canon_term(p.cond, tenv),
                _canon(p.then, tenv, renv, counter),
                _canon(p.els, tenv, renv, counter))
    raise TypeError("unknown protocol node %r" % p)


def _canon_term(tm: LTerm, tenv: Dict[str, int]):
    from .terms import (
        TApp1, TApp2, TBin, TFst, TIf, TList, TPair, TSko, TSnd,
    )
    c = tm.__class__
    if c is TLit:
        from .terms import sval_repr
        return ("lit", sval_repr(tm.v))
    if c is TVar:
        if tm.name in tenv:
            return ("bvar", tenv[tm.name])
        return ("fvar", tm.name)
    if c is TSko:
        return ("sko", tm.uid)
    if c is TBin:
        return ("bin", tm.op, _canon_term(tm.l, tenv), _canon_term(tm.r, tenv))
    if c is TPair:
        return ("pair", _canon_term(tm.a, tenv), _canon_term(tm.b, tenv))
    if c is TFst:
        return ("fst", _canon_term(tm.t, tenv))
    if c is TSnd:
        return ("snd", _canon_term(tm.t, tenv))
    if c is TList:
        return ("list",) + tuple(_canon_term(i, tenv) for i in tm.items)
    if c is TApp1:
        return ("app1", tm.fn, _canon_term(tm.t, tenv))
    if c is TApp2:
        return ("app2", tm.fn, _canon_term(tm.a, tenv),
                _canon_term(tm.b, tenv))
    if c is TIf:
        return ("ite", _canon_term(tm.c, tenv), _canon_term(tm.a, tenv),
                _canon_term(tm.b, tenv))
    raise TypeError("unknown term %r" % tm)


def _canon_pred(pred: Pred, tenv, renv, counter):
    return tuple(_canon_atom(a, tenv, renv, counter) for a in pred.atoms)


def _canon_atom(a, tenv, renv, counter):
    from .terms import (
        LList, LListNoOwn, Perm, PointsTo, Sorted, Trusted,
    )
    c = a.__class__
    if c is PureP:
        return ("pure", _canon_term(a.term, tenv))
    if c is PointsTo:
        return ("pt", _canon_term(a.loc, tenv), _canon_term(a.val, tenv))
    if c is LList:
        return ("ll", _canon_term(a.loc, tenv), _canon_term(a.items, tenv))
    if c is LListNoOwn:
        return ("llv", _canon_term(a.loc, tenv), _canon_term(a.items, tenv))
    if c is ChanOwn:
        return ("chan", _canon_term(a.endpoint, tenv),
                _canon(a.proto, tenv, renv, counter))
    if c is Trusted:
        return ("trusted", a.tag)
    if c is Sorted:
        return ("sorted", _canon_term(a.out, tenv), _canon_term(a.inp, tenv))
    if c is Perm:
        return ("perm", _canon_term(a.out, tenv), _canon_term(a.inp, tenv))
    if c is Guard:
        return ("guard", _canon_term(a.cond, tenv),
                _canon_atom(a.atom, tenv, renv, counter))
    raise TypeError("unknown atom %r" % a)


# ---------------------------------------------------------------------------
# Choice encoding (select/branch as boolean message + conditional)

def choice(action: str, left: Protocol, right: Protocol,
           binder: Optional[str] = None, payload: Pred = None) -> Msg:
    """(left) <+> (right) when action is '!', (left) <&> (right) for '?'."""
    b = binder or _fresh("c")
    return Msg(action, ((b, BOOL),), TVar(b),
               payload if payload is not None else Pred(),
               Cond(TVar(b), left, right))


def is_choice(p: Protocol) -> Optional[Tuple[str, Protocol, Protocol, Pred]]:
    """Recognize the choice encoding; returns (action, left, right, payload)."""
    if p.__class__ is not Msg or len(p.binders) != 1:
        return None
    bname, bsort = p.binders[0]
    if bsort != BOOL:
        return None
    if p.value.__class__ is not TVar or p.value.name != bname:
        return None
    if p.tail.__class__ is not Cond:
        return None
    c = p.tail.cond
    if c.__class__ is not TVar or c.name != bname:
        return None
    return p.action, p.tail.then, p.tail.els, p.payload
