"""Algorithmic checker for the asynchronous subprotocol relation.

check_subprot(p, q) decides (soundly, not completely) whether an endpoint
governed by p may be used as if it were governed by q:

  * matching sends: q's binders become opaque placeholder constants (the
    user may instantiate them arbitrarily), p's binders are solved against
    q's value by first-order syntactic matching, and q's payload together
    with any ambient resources must entail p's payload;
  * matching receives: the mirror image;
  * a receive in front of a send on the left may be postponed: the first
    send found behind a prefix of receives is hoisted to the front,
    provided neither its value nor its payload mentions a binder of a
    skipped receive (otherwise the verdict is DependentSwap);
  * leftover entailment resources stay available as an ambient frame for
    the remainder of the comparison;
  * recursion is handled coinductively: re-reaching a goal already under
    consideration closes that branch.

Verdicts are Yes (with a derivation trace), No (with a reason), or Unknown
(fuel or an undecidable conditional).  Entailment is pluggable; the default
is syntactic multiset matching plus evaluation of ground facts.
"""

from __future__ import annotations

import itertools
from typing import Callable, Dict, List, Optional, Set, Tuple

from .lang.ast import VBool
from .protocol.ast import Cond, End, Msg, Protocol
from .protocol.ops import (
    ProtocolError, canon_key, fold_protocol, is_choice, normalize_head,
    subst_binders, _fresh,
)
from .protocol.terms import (
    Atom, ChanOwn, Guard, LList, LListNoOwn, LTerm, Perm, PointsTo,
    Pred, PureP, Sorted, TApp1, TApp2, TBin, TFst, TIf, TList, TLit, TPair,
    TRUE_TERM, TSko, TSnd, Trusted, TVar, atom_terms, eval_term, fold_atom,
    fold_term, subst_atom, subst_pred, subst_term, sval_eq, term_eq,
    term_free_vars,
)

# Failure reasons
HEAD_MISMATCH = "HeadMismatch"
VALUE_MISMATCH = "ValueMismatch"
ENTAIL_FAIL = "EntailFail"
DEPENDENT_SWAP = "DependentSwap"
END_VS_MSG = "EndVsMsg"

_sko_ids = itertools.count(1)


class Verdict:
    __slots__ = ("kind", "reason", "detail", "derivation")

    def __init__(self, kind: str, reason: str = "", detail: str = "",
                 derivation: Optional[List[str]] = None):
        self.kind = kind  # "yes" | "no" | "unknown"
        self.reason = reason
        self.detail = detail
        self.derivation = derivation or []

    @property
    def is_yes(self) -> bool:
        return self.kind == "yes"

    @property
    def is_no(self) -> bool:
        return self.kind == "no"

    def __repr__(self):
        if self.kind == "yes":
            return "<Yes (%d steps)>" % len(self.derivation)
        if self.kind == "no":
            return "<No %s: %s>" % (self.reason, self.detail)
        return "<Unknown %s>" % self.reason


def _yes(derivation):
    return Verdict("yes", derivation=derivation)


def _no(reason, detail=""):
    return Verdict("no", reason=reason, detail=detail)


def _unknown(reason, detail=""):
    return Verdict("unknown", reason=reason, detail=detail)


# ---------------------------------------------------------------------------
# First-order matching of terms (pattern variables in `flex` only)

def match_term(pattern: LTerm, target: LTerm, flex: Set[str],
               theta: Dict[str, LTerm]) -> Optional[Dict[str, LTerm]]:
    pattern = fold_term(subst_term(pattern, theta))
    target = fold_term(target)
    return _match(pattern, target, flex, theta)


def _match(p: LTerm, t: LTerm, flex: Set[str],
           theta: Dict[str, LTerm]) -> Optional[Dict[str, LTerm]]:
    pc = p.__class__
    if pc is TVar and p.name in flex:
        bound = theta.get(p.name)
        if bound is not None:
            return theta if term_eq(fold_term(bound), t) else None
        theta = dict(theta)
        theta[p.name] = t
        return theta
    tc = t.__class__
    if pc is not tc:
        return None
    if pc is TLit:
        return theta if sval_eq(p.v, t.v) is True else None
    if pc is TVar:
        return theta if p.name == t.name else None
    if pc is TSko:
        return theta if p.uid == t.uid else None
    if pc is TBin:
        if p.op != t.op:
            return None
        theta = _match(p.l, t.l, flex, theta)
        return None if theta is None else _match(p.r, t.r, flex, theta)
    if pc is TPair:
        theta = _match(p.a, t.a, flex, theta)
        return None if theta is None else _match(p.b, t.b, flex, theta)
    if pc in (TFst, TSnd):
        return _match(p.t, t.t, flex, theta)
    if pc is TList:
        if len(p.items) != len(t.items):
            return None
        for a, b in zip(p.items, t.items):
            theta = _match(a, b, flex, theta)
            if theta is None:
                return None
        return theta
    if pc is TApp1:
        if p.fn != t.fn:
            return None
        return _match(p.t, t.t, flex, theta)
    if pc is TApp2:
        if p.fn != t.fn:
            return None
        theta = _match(p.a, t.a, flex, theta)
        return None if theta is None else _match(p.b, t.b, flex, theta)
    if pc is TIf:
        theta = _match(p.c, t.c, flex, theta)
        if theta is None:
            return None
        theta = _match(p.a, t.a, flex, theta)
        return None if theta is None else _match(p.b, t.b, flex, theta)
    return None


def match_atom(req: Atom, avail: Atom, flex: Set[str],
               theta: Dict[str, LTerm],
               subcheck: Optional[Callable] = None
               ) -> Optional[Dict[str, LTerm]]:
    """Match a required atom against an available one, solving flex vars."""
    rc = req.__class__
    if rc is not avail.__class__:
        return None
    if rc is Trusted:
        return theta if req.tag == avail.tag else None
    if rc is PureP:
        return match_term(req.term, avail.term, flex, theta)
    if rc is PointsTo:
        theta = match_term(req.loc, avail.loc, flex, theta)
        if theta is None:
            return None
        return match_term(req.val, avail.val, flex, theta)
    if rc in (LList, LListNoOwn):
        theta = match_term(req.loc, avail.loc, flex, theta)
        if theta is None:
            return None
        return match_term(req.items, avail.items, flex, theta)
    if rc in (Sorted, Perm):
        theta = match_term(req.out, avail.out, flex, theta)
        if theta is None:
            return None
        return match_term(req.inp, avail.inp, flex, theta)
    if rc is ChanOwn:
        theta = match_term(req.endpoint, avail.endpoint, flex, theta)
        if theta is None:
            return None
        rp = subst_binders(req.proto, {k: v for k, v in theta.items()})
        if canon_key(rp) == canon_key(avail.proto):
            return theta
        if subcheck is not None and subcheck(avail.proto, rp):
            return theta
        return None
    if rc is Guard:
        theta = match_term(req.cond, avail.cond, flex, theta)
        if theta is None:
            return None
        return match_atom(req.atom, avail.atom, flex, theta, subcheck)
    return None


# ---------------------------------------------------------------------------
# Ground evaluation of mathematical atoms

def _eval_pure_atom(a: Atom) -> Optional[bool]:
    """True/False for a ground fact; None when not ground or not a fact."""
    c = a.__class__
    if c is PureP:
        v = eval_term(a.term, None)
        if isinstance(v, VBool):
            return v.b
        return None
    if c is Sorted:
        out = eval_term(a.out, None)
        inp = eval_term(a.inp, None)
        if isinstance(out, tuple) and isinstance(inp, tuple):
            return _sorted_perm(out, inp)
        return None
    if c is Perm:
        out = eval_term(a.out, None)
        inp = eval_term(a.inp, None)
        if isinstance(out, tuple) and isinstance(inp, tuple):
            return _is_perm(out, inp)
        return None
    if c is Guard:
        cv = eval_term(a.cond, None)
        if isinstance(cv, VBool):
            if not cv.b:
                return True
            return _eval_pure_atom(a.atom)
        return None
    return None


def _sval_key(v) -> str:
    from .protocol.terms import sval_repr
    return sval_repr(v)


def _is_perm(out: tuple, inp: tuple) -> bool:
    if len(out) != len(inp):
        return False
    a = sorted(_sval_key(v) for v in out)
    b = sorted(_sval_key(v) for v in inp)
    return a == b


def _sorted_perm(out: tuple, inp: tuple) -> bool:
    from .lang.ast import VInt
    if not _is_perm(out, inp):
        return False
    ns = [v.n for v in out if isinstance(v, VInt)]
    if len(ns) != len(out):
        return False
    return all(ns[i] <= ns[i + 1] for i in range(len(ns) - 1))


def _is_persistent(a: Atom) -> bool:
    c = a.__class__
    if c in (PureP, Sorted, Perm, Trusted):
        return True
    if c is Guard:
        return _is_persistent(a.atom)
    return False


# ---------------------------------------------------------------------------
# Default entailment: avail ⊢ req, solving flex variables, returning surplus

def entails_default(avail: Tuple[Atom, ...], req: Tuple[Atom, ...],
                    flex: Set[str],
                    subcheck: Optional[Callable] = None
                    ) -> Optional[Tuple[Dict[str, LTerm], Tuple[Atom, ...]]]:
    facts = [fold_atom(a) for a in avail if _is_persistent(a)]
    resources = [fold_atom(a) for a in avail if not _is_persistent(a)]
    for f in facts:
        if _eval_pure_atom(f) is False:
            # contradictory context provides anything vacuously
            return {}, (f,)
    used = [False] * len(resources)

    def solve(i: int, theta: Dict[str, LTerm]) -> Optional[Dict[str, LTerm]]:
        if i == len(req):
            return theta
        a = fold_atom(subst_atom(req[i], theta))
        ground = _eval_pure_atom(a)
        if ground is True:
            return solve(i + 1, theta)
        if ground is False:
            return None
        if _is_persistent(a):
            # equality with one solvable side binds a flexible variable
            if a.__class__ is PureP and a.term.__class__ is TBin \
                    and a.term.op == "=":
                l, r = a.term.l, a.term.r
                for var, val in ((l, r), (r, l)):
                    if var.__class__ is TVar and var.name in flex \
                            and var.name not in theta \
                            and eval_term(val, None) is not None:
                        theta2 = dict(theta)
                        theta2[var.name] = fold_term(val)
                        out = solve(i + 1, theta2)
                        if out is not None:
                            return out
            # membership with a flexible element: try each candidate
            if a.__class__ is PureP and a.term.__class__ is TApp2 \
                    and a.term.fn == "mem" and a.term.a.__class__ is TVar \
                    and a.term.a.name in flex and a.term.a.name not in theta:
                xs = eval_term(a.term.b, None)
                if isinstance(xs, tuple):
                    seen = set()
                    for cand in xs:
                        k = _sval_key(cand)
                        if k in seen:
                            continue
                        seen.add(k)
                        theta2 = dict(theta)
                        theta2[a.term.a.name] = TLit(cand)
                        out = solve(i + 1, theta2)
                        if out is not None:
                            return out
                    return None
            for f in facts:
                theta2 = match_atom(a, f, flex, theta, subcheck)
                if theta2 is not None:
                    out = solve(i + 1, theta2)
                    if out is not None:
                        return out
            return None
        for j, r in enumerate(resources):
            if used[j]:
                continue
            theta2 = match_atom(a, r, flex, theta, subcheck)
            if theta2 is not None:
                used[j] = True
                out = solve(i + 1, theta2)
                if out is not None:
                    return out
                used[j] = False
        return None

    theta = solve(0, {})
    if theta is None:
        return None
    surplus = tuple(r for j, r in enumerate(resources) if not used[j])
    # facts are reusable, so one copy of each is enough
    seen: Set[tuple] = set()
    for f in facts:
        if _eval_pure_atom(f) is True:
            continue
        k = _atom_canon(f)
        if k not in seen:
            seen.add(k)
            surplus += (f,)
    return theta, surplus


# ---------------------------------------------------------------------------
# Goal identity up to renaming of placeholder constants

def _atom_canon(a: Atom) -> tuple:
    c = a.__class__
    if c is Trusted:
        return ("trusted", a.tag)
    if c is PureP:
        return ("pure", _canon_term_key(a.term))
    if c is PointsTo:
        return ("pt", _canon_term_key(a.loc), _canon_term_key(a.val))
    if c is LList:
        return ("ll", _canon_term_key(a.loc), _canon_term_key(a.items))
    if c is LListNoOwn:
        return ("llv", _canon_term_key(a.loc), _canon_term_key(a.items))
    if c is Sorted:
        return ("sorted", _canon_term_key(a.out), _canon_term_key(a.inp))
    if c is Perm:
        return ("perm", _canon_term_key(a.out), _canon_term_key(a.inp))
    if c is ChanOwn:
        return ("chan", _canon_term_key(a.endpoint), canon_key(a.proto))
    if c is Guard:
        return ("guard", _canon_term_key(a.cond), _atom_canon(a.atom))
    return ("atom", repr(a))


def _sko_uids(k, out: Set[int]) -> None:
    if isinstance(k, tuple):
        if len(k) == 2 and k[0] == "sko":
            out.add(k[1])
        else:
            for part in k:
                _sko_uids(part, out)


def _rename_skos(k, ren: Dict[int, int]):
    if isinstance(k, tuple):
        if len(k) == 2 and k[0] == "sko":
            if k[1] not in ren:
                ren[k[1]] = len(ren) + 1
            return ("sko", ren[k[1]])
        return tuple(_rename_skos(part, ren) for part in k)
    return k


def _prune_ambient(k1: tuple, k2: tuple,
                   ambient: Tuple[Atom, ...]) -> Tuple[Atom, ...]:
    """Drop carried atoms that mention placeholder constants no longer
    reachable from the goal (they can never be demanded again).  Keeps the
    coinductive goal set finite when loop bodies shed fresh facts."""
    reachable: Set[int] = set()
    _sko_uids(k1, reachable)
    _sko_uids(k2, reachable)
    pending = [(a, _atom_canon(a)) for a in ambient]
    kept = []
    changed = True
    while changed:
        changed = False
        rest = []
        for a, k in pending:
            uids: Set[int] = set()
            _sko_uids(k, uids)
            if not uids or uids & reachable:
                kept.append((a, k))
                reachable |= uids
                changed = True
            else:
                rest.append((a, k))
        pending = rest
    return tuple(a for a, _ in kept)


def _goal_key(k1: tuple, k2: tuple, ambient: Tuple[Atom, ...]) -> tuple:
    """Hashable goal identity, invariant under consistent renaming of the
    placeholder constants minted for message binders."""
    amb = sorted((_atom_canon(a) for a in ambient),
                 key=lambda k: repr(_rename_skos(k, {})))
    ren: Dict[int, int] = {}
    return (_rename_skos(k1, ren), _rename_skos(k2, ren),
            tuple(_rename_skos(k, ren) for k in amb))


# ---------------------------------------------------------------------------
# The checker

class _Checker:
    def __init__(self, oracle, fuel: int):
        self.oracle = oracle if oracle is not None else entails_default
        self.budget = fuel
        self.cache: Dict[tuple, Verdict] = {}
        self.active: Set[tuple] = set()

    def subcheck(self, p: Protocol, q: Protocol) -> bool:
        """Entailment callback for nested endpoint-ownership atoms."""
        return self.check(p, q, ()).is_yes

    def check(self, p1: Protocol, p2: Protocol,
              ambient: Tuple[Atom, ...]) -> Verdict:
        if self.budget <= 0:
            return _unknown("fuel")
        self.budget -= 1
        try:
            p1, s1 = normalize_head(p1)
            p2, s2 = normalize_head(p2)
        except ProtocolError as e:
            return _unknown("normalize", str(e))
        self.budget -= s1 + s2
        if self.budget <= 0:
            return _unknown("fuel")
        k1, k2 = canon_key(p1), canon_key(p2)
        ambient = _prune_ambient(k1, k2, ambient)
        key = _goal_key(k1, k2, ambient)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        if key in self.active:
            # re-reached a goal currently under consideration: close the
            # branch coinductively
            return _yes(["cycle"])
        self.active.add(key)
        verdict = self._dispatch(p1, p2, ambient)
        self.active.discard(key)
        # A failure never depends on the optimistic cycle assumptions (they
        # only make goals easier), so it is always safe to remember.  A Yes
        # may rest on an assumption about a goal still on the stack, so it
        # is only remembered once the stack has fully unwound.
        if not verdict.is_yes or not self.active:
            self.cache[key] = verdict
        return verdict

    # -- dispatch on head shapes -------------------------------------------

    def _dispatch(self, p1, p2, ambient) -> Verdict:
        c1, c2 = p1.__class__, p2.__class__
        if c1 is End and c2 is End:
            return _yes(["end"])
        if c1 is Cond or c2 is Cond:
            return self._conds(p1, p2, ambient)
        if c1 is End or c2 is End:
            return _no(END_VS_MSG,
                       "one side is finished, the other still has %r"
                       % (p2 if c1 is End else p1))
        # both are messages
        if p1.action == "!" and p2.action == "!":
            return self._send_send(p1, p2, ambient)
        if p1.action == "?" and p2.action == "?":
            return self._recv_recv(p1, p2, ambient)
        if p1.action == "?" and p2.action == "!":
            pulled = self._pull_send(p1)
            if isinstance(pulled, Verdict):
                return pulled
            v = self.check(pulled, p2, ambient)
            if v.is_yes:
                return _yes(["swap-pull"] + v.derivation)
            # retry, letting the skipped receives fund the send's payload
            funded = self._pull_send(p1, cancel=True)
            if not isinstance(funded, Verdict) \
                    and canon_key(funded) != canon_key(pulled):
                v2 = self.check(funded, p2, ambient)
                if v2.is_yes:
                    return _yes(["swap-fund"] + v2.derivation)
            return v
        return _no(HEAD_MISMATCH,
                   "left protocol sends before the right one expects it")

    def _conds(self, p1, p2, ambient) -> Verdict:
        if p1.__class__ is Cond and p2.__class__ is Cond:
            if _canon_term_key(p1.cond) == _canon_term_key(p2.cond):
                vt = self.check(p1.then, p2.then, ambient)
                if not vt.is_yes:
                    return vt
                ve = self.check(p1.els, p2.els, ambient)
                if not ve.is_yes:
                    return ve
                return _yes(["cond"] + vt.derivation + ve.derivation)
            return _unknown("cond", "branch guards differ")
        return _unknown("cond", "only one side is conditional")

    def _send_send(self, p1: Msg, p2: Msg, ambient) -> Verdict:
        sigma = _skolemize(p2.binders)
        w = fold_term(subst_term(p2.value, sigma))
        q_atoms = subst_pred(p2.payload, sigma).atoms
        flex = {n for n, _ in p1.binders}
        theta = match_term(p1.value, w, flex, {})
        if theta is None:
            return _no(VALUE_MISMATCH,
                       "send value %r does not cover %r" % (p1.value, w))
        res = self.oracle(q_atoms + tuple(ambient),
                          p1.payload.atoms, flex, self.subcheck)
        if res is None:
            return _no(ENTAIL_FAIL,
                       "available %r does not provide %r"
                       % (q_atoms + tuple(ambient), p1.payload.atoms))
        theta2, surplus = res
        theta = _merge_theta(theta, theta2, flex)
        if theta is None:
            return _no(ENTAIL_FAIL, "conflicting binder solutions")
        _fill_free(theta, flex, p1.binders, p2.binders, sigma)
        v = self.check(subst_binders(p1.tail, theta),
                       subst_binders(p2.tail, sigma), surplus)
        if v.is_yes:
            return _yes(["send-send"] + v.derivation)
        return v

    def _recv_recv(self, p1: Msg, p2: Msg, ambient) -> Verdict:
        sigma = _skolemize(p1.binders)
        v1 = fold_term(subst_term(p1.value, sigma))
        p_atoms = subst_pred(p1.payload, sigma).atoms
        flex = {n for n, _ in p2.binders}
        theta = match_term(p2.value, v1, flex, {})
        if theta is None:
            return _no(VALUE_MISMATCH,
                       "receive value %r does not cover %r" % (p2.value, v1))
        res = self.oracle(p_atoms + tuple(ambient),
                          p2.payload.atoms, flex, self.subcheck)
        if res is None:
            return _no(ENTAIL_FAIL,
                       "available %r does not provide %r"
                       % (p_atoms + tuple(ambient), p2.payload.atoms))
        theta2, surplus = res
        theta = _merge_theta(theta, theta2, flex)
        if theta is None:
            return _no(ENTAIL_FAIL, "conflicting binder solutions")
        _fill_free(theta, flex, p2.binders, p1.binders, sigma)
        v = self.check(subst_binders(p1.tail, sigma),
                       subst_binders(p2.tail, theta), surplus)
        if v.is_yes:
            return _yes(["recv-recv"] + v.derivation)
        return v

    def _pull_send(self, p1: Protocol, cancel: bool = False):
        """Hoist the first send behind p1's receive prefix to the front.

        With cancel set, payload atoms of the send that also appear in a
        skipped receive are dropped from both: the receive's resource pays
        for the send's obligation (receive monotonicity threads it), after
        which the two plain messages commute.

        Returns the rewritten protocol, or a No/Unknown verdict.
        """
        prefix: List[Msg] = []
        skipped: Set[str] = set()
        cur = p1
        while True:
            if self.budget <= 0:
                return _unknown("fuel")
            try:
                cur, steps = normalize_head(cur)
            except ProtocolError as e:
                return _unknown("normalize", str(e))
            self.budget -= steps + 1
            c = cur.__class__
            if c is Msg and cur.action == "?":
                prefix.append(cur)
                skipped |= {n for n, _ in cur.binders}
                cur = cur.tail
                continue
            if c is Msg and cur.action == "!":
                deps = term_free_vars(cur.value) & skipped
                for a in cur.payload.atoms:
                    for t in atom_terms(a):
                        deps |= term_free_vars(t) & skipped
                if deps:
                    return _no(DEPENDENT_SWAP,
                               "the send depends on values still to be "
                               "received: %s" % ", ".join(sorted(deps)))
                ren = {n: TVar(_fresh(n)) for n, _ in cur.binders
                       if n in skipped}
                binders = tuple((ren[n].name if n in ren else n, s)
                                for n, s in cur.binders)
                value = subst_term(cur.value, ren)
                send_atoms = list(subst_pred(cur.payload, ren).atoms)
                kept = [list(m.payload.atoms) for m in prefix]
                if cancel:
                    for i, a in enumerate(send_atoms):
                        k = _atom_canon(a)
                        for row in kept:
                            hit = next((j for j, b in enumerate(row)
                                        if b is not None
                                        and _atom_canon(b) == k), None)
                            if hit is not None:
                                row[hit] = None
                                send_atoms[i] = None
                                break
                rest = subst_binders(cur.tail, ren) if ren else cur.tail
                for m, row in zip(reversed(prefix), reversed(kept)):
                    rest = Msg("?", m.binders, m.value,
                               Pred(tuple(b for b in row if b is not None)),
                               rest)
                return Msg("!", binders, value,
                           Pred(tuple(a for a in send_atoms if a is not None)),
                           rest)
            if c is End:
                return _no(DEPENDENT_SWAP,
                           "no send is available behind the receive prefix")
            return _no(DEPENDENT_SWAP,
                       "the receive prefix ends in a conditional")


def _canon_term_key(t: LTerm):
    from .protocol.ops import _canon_term
    return _canon_term(fold_term(t), {})


def _skolemize(binders) -> Dict[str, LTerm]:
    return {n: TSko(next(_sko_ids), n) for n, _ in binders}


def _merge_theta(a: Dict[str, LTerm], b: Dict[str, LTerm],
                 flex: Set[str]) -> Optional[Dict[str, LTerm]]:
    out = dict(a)
    for k, v in b.items():
        if k not in flex:
            continue
        if k in out and not term_eq(fold_term(out[k]), fold_term(v)):
            return None
        out[k] = v
    return out


def _fill_free(theta: Dict[str, LTerm], flex: Set[str],
               own_binders=(), other_binders=(),
               sigma: Optional[Dict[str, LTerm]] = None) -> None:
    """Instantiate solvable binders the value match left open.

    Any instantiation is a valid witness, so a binder that lines up
    positionally with one of the other side's binders borrows that
    binder's placeholder (which is what makes alpha-variants of the same
    protocol relate); everything else gets a fresh placeholder.
    """
    aligned: Dict[str, LTerm] = {}
    if sigma:
        for i, (n, _) in enumerate(own_binders):
            if i < len(other_binders) and other_binders[i][0] in sigma:
                aligned[n] = sigma[other_binders[i][0]]
    for n in flex:
        if n not in theta:
            hit = aligned.get(n)
            theta[n] = hit if hit is not None else TSko(next(_sko_ids), n)


def check_subprot(p1: Protocol, p2: Protocol,
                  oracle: Optional[Callable] = None,
                  fuel: int = 128,
                  ambient: Tuple[Atom, ...] = ()) -> Verdict:
    """Decide whether protocol p1 may be weakened to p2."""
    return _Checker(oracle, fuel).check(fold_protocol(p1), fold_protocol(p2),
                                        tuple(ambient))


def list_repr_oracle(avail: Tuple[Atom, ...], req: Tuple[Atom, ...],
                     flex: Set[str], subcheck: Optional[Callable] = None):
    """Entailment that identifies the two list-ownership presentations.

    The element-typed and value-typed views of a heap list assert ownership
    of the same cells, so for relating protocols written in the two styles
    both atoms are flattened to a single class before matching.
    """
    def flat(a: Atom) -> Atom:
        if a.__class__ is LListNoOwn:
            return LList(a.loc, a.items)
        if a.__class__ is Guard:
            inner = flat(a.atom)
            if inner is not a.atom:
                return Guard(a.cond, inner)
        return a

    return entails_default(tuple(flat(a) for a in avail),
                           tuple(flat(a) for a in req), flex, subcheck)


def weaken_select_left(p: Protocol) -> Protocol:
    """Commit a sender-side choice to its left branch.

    The choice head (a boolean send followed by a conditional) becomes a
    plain send of true followed by the left continuation.
    """
    head, _ = normalize_head(p)
    ch = is_choice(head)
    if ch is None or ch[0] != "!":
        raise ProtocolError("protocol does not offer a choice")
    bname = head.binders[0][0]
    env = {bname: TRUE_TERM}
    return Msg("!", (), TRUE_TERM,
               subst_pred(head.payload, env),
               fold_protocol(subst_binders(head.tail, env)))
