"""Runtime monitor for protocol-governed channels.

The monitor is an event observer for the abstract machine.  It mirrors
every channel created by the prelude, attaches a protocol to the channels
named in an assignment map, and then checks each send/receive against the
owning side's current protocol view:

  * the head of the view must be a matching message; when a send arrives
    while the view starts with receives, the first send buried behind them
    is hoisted to the front (an auto-swap, logged), provided it does not
    depend on the values still to be received;
  * message binders are inferred from the concrete value, then from the
    payload (linked-list walks, heap reads, pure equations, membership
    candidates); leftovers are reported as AmbiguousInstantiation;
  * payload assertions are evaluated against the heap: pure formulas,
    sortedness/permutation facts, heap cells, linked lists, and endpoint
    delegation (which requires the delegated endpoint's current view to
    weaken to the stated protocol);
  * resources asserted in a payload travel with the message: the sending
    thread loses the heap cells and endpoints involved until they are
    granted to the receiver.

Ownership modes: "off" disables the ledger, "relaxed" (default) flags use
of resources that are in flight or owned by someone else, "strict"
additionally pins every endpoint to a single owning thread at a time.

Violation kinds: ValueMismatch, PredicateFalse, AmbiguousInstantiation,
ProtocolEnded, OwnershipMissing, UseAfterDelegate.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, List, Optional, Tuple

from .lang.ast import Heap, VBool, VInj, VLoc, VPair, Value, value_eq
from .lang.machine import (
    Config, EV_CAS, EV_CHAN_LABEL, EV_LOAD, EV_NEW_CHAN, EV_RECV,
    EV_SEND, EV_STORE, MonitorAbort, trace_hash_of,
)
from .protocol.ast import Cond, End, Msg, Protocol
from .protocol.ops import (
    ProtocolError, canon_key, dual, fold_protocol, normalize_head,
    subst_binders, _fresh,
)
from .protocol.terms import (
    Atom, ChanOwn, Guard, LList, LListNoOwn, Perm, PointsTo, PureP, Sorted,
    TApp2, TBin, TList, TLit, TPair, TSko, TVar, Trusted, atom_terms,
    eval_term,
    fold_term, subst_atom, subst_pred, subst_term, sval_eq, term_free_vars,
)
from .subtyping import check_subprot

IN_FLIGHT = "in-flight"

VALUE_MISMATCH = "ValueMismatch"
PREDICATE_FALSE = "PredicateFalse"
AMBIGUOUS = "AmbiguousInstantiation"
PROTOCOL_ENDED = "ProtocolEnded"
OWNERSHIP_MISSING = "OwnershipMissing"
USE_AFTER_DELEGATE = "UseAfterDelegate"


class Violation:
    __slots__ = ("kind", "detail", "chan", "side", "tid", "step")

    def __init__(self, kind, detail, chan=None, side=None, tid=None,
                 step=None):
        self.kind = kind
        self.detail = detail
        self.chan = chan
        self.side = side
        self.tid = tid
        self.step = step

    def __repr__(self):
        where = "" if self.chan is None else " chan=%s/%s" % (self.chan,
                                                              self.side)
        return "<%s%s tid=%s step=%s: %s>" % (self.kind, where, self.tid,
                                              self.step, self.detail)


class MsgRecord:
    """One message in flight: its value plus the resources it carries."""

    __slots__ = ("value", "locs", "endpoints", "step")

    def __init__(self, value: Value, locs, endpoints, step: int):
        self.value = value
        self.locs = frozenset(locs)
        self.endpoints = tuple(endpoints)  # (cid, side, stated protocol)
        self.step = step


class ChannelState:
    __slots__ = ("cid", "label", "prot", "bufs", "eps")

    def __init__(self, cid: int):
        self.cid = cid
        self.label: Optional[str] = None
        self.prot: Dict[str, Optional[Protocol]] = {"L": None, "R": None}
        self.bufs: Dict[str, deque] = {"L": deque(), "R": deque()}
        self.eps: Dict[str, tuple] = {}  # side -> (send loc, recv loc)


def _other(side: str) -> str:
    return "R" if side == "L" else "L"


def _ep_key(v: Value) -> Optional[Tuple[int, int]]:
    """(send buffer loc, recv buffer loc) of an endpoint triple value."""
    if v.__class__ is not VPair or v.b.__class__ is not VPair:
        return None
    l, r, lk = v.a, v.b.a, v.b.b
    if l.__class__ is VLoc and r.__class__ is VLoc and lk.__class__ is VLoc:
        return (l.i, r.i)
    return None


def read_list(heap: Heap, loc: int):
    """Contents and cell set of the linked list at loc, or None."""
    items: List[Value] = []
    cells: List[int] = []
    seen = set()
    cur = loc
    while True:
        if cur in seen:
            return None
        seen.add(cur)
        cells.append(cur)
        cell = heap.cells.get(cur)
        if cell is None or cell.__class__ is not VInj:
            return None
        if cell.which == 1:
            return items, cells
        if cell.v.__class__ is not VPair or cell.v.b.__class__ is not VLoc:
            return None
        items.append(cell.v.a)
        cur = cell.v.b.i


class Monitor:
    """Observer enforcing protocol assignments over machine events."""

    def __init__(self, assignments: Optional[Dict[str, Protocol]] = None,
                 ownership: str = "relaxed", auto_swap: bool = True,
                 check_fuel: int = 128):
        if ownership not in ("strict", "relaxed", "off"):
            raise ValueError("unknown ownership mode %r" % ownership)
        self.assignments = dict(assignments or {})
        self.ownership = ownership
        self.auto_swap = auto_swap
        self.check_fuel = check_fuel
        self.channels: Dict[int, ChannelState] = {}
        self.endpoints: Dict[Tuple[int, int], Tuple[int, str]] = {}
        self.loc_owner: Dict[int, object] = {}
        self.ep_owner: Dict[Tuple[int, str], object] = {}
        self.delegated: set = set()
        self.swap_log: List[tuple] = []
        self.trust_log: List[str] = []
        self.violations: List[Violation] = []

    # -- event dispatch -----------------------------------------------------

    def __call__(self, cfg: Config, kind: int, tid: int, payload: tuple):
        if kind == EV_NEW_CHAN:
            self.mon_new_chan(cfg, tid, payload[0])
        elif kind == EV_CHAN_LABEL:
            self._on_label(cfg, tid, payload[0], payload[1])
        elif kind == EV_SEND:
            self.mon_send(cfg, tid, payload[0], payload[1])
        elif kind == EV_RECV:
            self.mon_recv(cfg, tid, payload[0], payload[1])
        elif kind in (EV_LOAD, EV_STORE, EV_CAS):
            self._on_access(cfg, tid, payload[0])
        # alloc/fork need no action: fresh cells are untracked

    def _abort(self, cfg, kind, detail, chan=None, side=None, tid=None):
        v = Violation(kind, detail, chan=chan, side=side, tid=tid,
                      step=cfg.step_count)
        self.violations.append(v)
        raise MonitorAbort(v)

    # -- channel lifecycle ----------------------------------------------------

    def mon_new_chan(self, cfg: Config, tid: int, cc: Value) -> None:
        left, right = cc.a, cc.b
        kl, kr = _ep_key(left), _ep_key(right)
        if kl is None or kr is None:
            return
        cid = len(self.channels) + 1
        ch = ChannelState(cid)
        ch.eps["L"], ch.eps["R"] = kl, kr
        self.channels[cid] = ch
        self.endpoints[kl] = (cid, "L")
        self.endpoints[kr] = (cid, "R")

    def _on_label(self, cfg: Config, tid: int, label: str, cc: Value) -> None:
        key = _ep_key(cc.a)
        hit = self.endpoints.get(key)
        if hit is None:
            return
        ch = self.channels[hit[0]]
        ch.label = label
        proto = self.assignments.get(label)
        if proto is not None:
            p = fold_protocol(proto)
            ch.prot["L"] = p
            ch.prot["R"] = fold_protocol(dual(p))

    # -- ownership ledger ---------------------------------------------------

    def _on_access(self, cfg: Config, tid: int, loc: int) -> None:
        if self.ownership == "off":
            return
        owner = self.loc_owner.get(loc)
        if owner is None or owner == tid:
            return
        if owner is IN_FLIGHT:
            self._abort(cfg, OWNERSHIP_MISSING,
                        "location %d is in flight" % loc, tid=tid)
        self._abort(cfg, OWNERSHIP_MISSING,
                    "location %d belongs to thread %s" % (loc, owner),
                    tid=tid)

    def _check_endpoint_use(self, cfg, cid, side, tid):
        if self.ownership == "off":
            return
        key = (cid, side)
        owner = self.ep_owner.get(key)
        if owner is IN_FLIGHT:
            self._abort(cfg, USE_AFTER_DELEGATE,
                        "endpoint was delegated and is in flight",
                        chan=cid, side=side, tid=tid)
        if owner is None:
            self.ep_owner[key] = tid
        elif owner != tid:
            # endpoints passed around outside the protocol (say, through a
            # fork closure, possibly lock-protected) may move freely; one
            # that was delegated through a message stays with its grantee
            if self.ownership == "strict" or key in self.delegated:
                self._abort(cfg, USE_AFTER_DELEGATE,
                            "endpoint belongs to thread %s" % owner,
                            chan=cid, side=side, tid=tid)
            self.ep_owner[key] = tid

    # -- send / receive -----------------------------------------------------

    def mon_send(self, cfg: Config, tid: int, ep: Value, value: Value):
        key = _ep_key(ep)
        hit = self.endpoints.get(key)
        if hit is None:
            return
        cid, side = hit
        ch = self.channels[cid]
        self._check_endpoint_use(cfg, cid, side, tid)
        p = ch.prot[side]
        if p is None:
            ch.bufs[side].append(MsgRecord(value, (), (), cfg.step_count))
            return
        p = self._normalize(cfg, ch, side, tid, p)
        if p.__class__ is End:
            self._abort(cfg, PROTOCOL_ENDED, "send after the protocol ended",
                        chan=cid, side=side, tid=tid)
        if p.__class__ is Cond:
            self._abort(cfg, VALUE_MISMATCH,
                        "protocol view stuck on an undecided branch",
                        chan=cid, side=side, tid=tid)
        if p.action == "?":
            if not self.auto_swap:
                self._abort(cfg, VALUE_MISMATCH,
                            "protocol expects a receive before this send",
                            chan=cid, side=side, tid=tid)
            p = self._pull_send(cfg, ch, side, tid, p)
            self.swap_log.append((cid, side, cfg.step_count))
        theta = self._infer(cfg, ch, side, tid, p, value)
        locs, eps = self._verify_payload(cfg, ch, side, tid, p.payload.atoms,
                                         theta)
        self._detach(cfg, tid, locs, eps)
        ch.prot[side] = fold_protocol(subst_binders(p.tail, theta))
        ch.bufs[side].append(MsgRecord(value, locs, eps, cfg.step_count))

    def mon_recv(self, cfg: Config, tid: int, ep: Value, value: Value):
        key = _ep_key(ep)
        hit = self.endpoints.get(key)
        if hit is None:
            return
        cid, side = hit
        ch = self.channels[cid]
        self._check_endpoint_use(cfg, cid, side, tid)
        buf = ch.bufs[_other(side)]
        rec = buf.popleft() if buf else MsgRecord(value, (), (),
                                                  cfg.step_count)
        p = ch.prot[side]
        if p is None:
            self._grant(tid, rec)
            return
        p = self._normalize(cfg, ch, side, tid, p)
        if p.__class__ is End:
            self._abort(cfg, PROTOCOL_ENDED,
                        "receive after the protocol ended",
                        chan=cid, side=side, tid=tid)
        if p.__class__ is Cond:
            self._abort(cfg, VALUE_MISMATCH,
                        "protocol view stuck on an undecided branch",
                        chan=cid, side=side, tid=tid)
        if p.action == "!":
            self._abort(cfg, VALUE_MISMATCH,
                        "protocol expects a send before this receive",
                        chan=cid, side=side, tid=tid)
        theta = self._infer(cfg, ch, side, tid, p, value)
        locs, eps = self._verify_payload(cfg, ch, side, tid, p.payload.atoms,
                                         theta)
        self._grant(tid, rec)
        for cell in locs:
            self.loc_owner[cell] = tid
        for cid2, side2, stated in eps:
            self.ep_owner[(cid2, side2)] = tid
            self.channels[cid2].prot[side2] = stated
        ch.prot[side] = fold_protocol(subst_binders(p.tail, theta))

    def _grant(self, tid: int, rec: MsgRecord) -> None:
        for cell in rec.locs:
            self.loc_owner[cell] = tid
        for cid2, side2, stated in rec.endpoints:
            self.ep_owner[(cid2, side2)] = tid
            self.channels[cid2].prot[side2] = stated

    def _detach(self, cfg, tid, locs, eps) -> None:
        for cell in locs:
            self.loc_owner[cell] = IN_FLIGHT
        for cid2, side2, _ in eps:
            self.ep_owner[(cid2, side2)] = IN_FLIGHT
            self.delegated.add((cid2, side2))

    # -- protocol mechanics ---------------------------------------------------

    def _normalize(self, cfg, ch, side, tid, p) -> Protocol:
        try:
            q, _ = normalize_head(p)
            return q
        except ProtocolError as e:
            self._abort(cfg, VALUE_MISMATCH, "protocol view broken: %s" % e,
                        chan=ch.cid, side=side, tid=tid)

    def _pull_send(self, cfg, ch, side, tid, p) -> Msg:
        """Hoist the first send behind the receive prefix of p."""
        prefix: List[Msg] = []
        skipped = set()
        cur = p
        for _ in range(self.check_fuel):
            cur = self._normalize(cfg, ch, side, tid, cur)
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
                    self._abort(cfg, VALUE_MISMATCH,
                                "send depends on values not yet received: %s"
                                % ", ".join(sorted(deps)),
                                chan=ch.cid, side=side, tid=tid)
                ren = {n: TVar(_fresh(n)) for n, _ in cur.binders
                       if n in skipped}
                binders = tuple((ren[n].name if n in ren else n, s)
                                for n, s in cur.binders)
                value = subst_term(cur.value, ren)
                payload = subst_pred(cur.payload, ren)
                rest = subst_binders(cur.tail, ren) if ren else cur.tail
                for m in reversed(prefix):
                    rest = Msg("?", m.binders, m.value, m.payload, rest)
                return Msg("!", binders, value, payload, rest)
            break
        self._abort(cfg, VALUE_MISMATCH,
                    "no send is available at this point of the protocol",
                    chan=ch.cid, side=side, tid=tid)

    # -- binder inference ------------------------------------------------------

    def _infer(self, cfg, ch, side, tid, p: Msg, value: Value) -> dict:
        flex = {n for n, _ in p.binders}
        theta: Dict[str, object] = {}
        pending: List[tuple] = []
        if not self._unify(p.value, value, flex, theta, pending):
            self._abort(cfg, VALUE_MISMATCH,
                        "value %r does not match the protocol's %r"
                        % (value, p.value), chan=ch.cid, side=side, tid=tid)
        heap = cfg.heap
        for _ in range(len(p.payload.atoms) + 2):
            changed = False
            if all(n in theta for n in flex):
                break
            for atom in p.payload.atoms:
                a = subst_atom(atom, theta)
                c = a.__class__
                if c is Guard:
                    cond = eval_term(fold_term(a.cond), None)
                    if not (isinstance(cond, VBool) and cond.b):
                        continue
                    a = a.atom
                    c = a.__class__
                if c in (LList, LListNoOwn):
                    tgt = a.items
                    needs = (term_free_vars(tgt) & flex) - set(theta)
                    if needs:
                        lv = eval_term(fold_term(a.loc), None)
                        if lv is not None and lv.__class__ is VLoc:
                            walked = read_list(heap, lv.i)
                            if walked is None:
                                pass
                            elif tgt.__class__ is TVar:
                                theta[tgt.name] = TList(tuple(
                                    TLit(it) for it in walked[0]))
                                changed = True
                            elif tgt.__class__ is TList \
                                    and len(tgt.items) == len(walked[0]):
                                before = len(theta)
                                for w, rv in zip(tgt.items, walked[0]):
                                    if not self._unify(w, rv, flex, theta,
                                                       pending):
                                        break
                                if len(theta) > before:
                                    changed = True
                elif c is PointsTo:
                    tgt = a.val
                    if tgt.__class__ is TVar and tgt.name in flex \
                            and tgt.name not in theta:
                        lv = eval_term(fold_term(a.loc), None)
                        if lv is not None and lv.__class__ is VLoc \
                                and lv.i in heap.cells:
                            theta[tgt.name] = TLit(heap.cells[lv.i])
                            changed = True
                elif c is PureP and a.term.__class__ is TBin \
                        and a.term.op == "=":
                    for var, other in ((a.term.l, a.term.r),
                                       (a.term.r, a.term.l)):
                        if var.__class__ is TVar and var.name in flex \
                                and var.name not in theta:
                            gv = eval_term(fold_term(other), None)
                            if gv is not None and not isinstance(gv, tuple):
                                theta[var.name] = TLit(gv)
                                changed = True
                            elif isinstance(gv, tuple):
                                theta[var.name] = TList(tuple(
                                    TLit(x) for x in gv))
                                changed = True
            if not changed:
                break
        # membership constraints: a single remaining candidate decides
        for atom in p.payload.atoms:
            a = subst_atom(atom, theta)
            if a.__class__ is PureP and a.term.__class__ is TApp2 \
                    and a.term.fn == "mem" and a.term.a.__class__ is TVar \
                    and a.term.a.name in flex and a.term.a.name not in theta:
                xs = eval_term(fold_term(a.term.b), None)
                if isinstance(xs, tuple):
                    uniq = []
                    for cand in xs:
                        if not any(sval_eq(cand, u) is True for u in uniq):
                            uniq.append(cand)
                    if len(uniq) == 1:
                        theta[a.term.a.name] = TLit(uniq[0])
        missing = [n for n in sorted(flex) if n not in theta]
        if missing:
            self._abort(cfg, AMBIGUOUS,
                        "cannot determine %s from the message"
                        % ", ".join(missing), chan=ch.cid, side=side, tid=tid)
        for w, rv in pending:
            wf = fold_term(subst_term(w, theta))
            got = eval_term(wf, None)
            if got is None or isinstance(got, tuple):
                self._abort(cfg, AMBIGUOUS,
                            "cannot evaluate message value %r" % (wf,),
                            chan=ch.cid, side=side, tid=tid)
            if value_eq(got, rv) is not True:
                self._abort(cfg, VALUE_MISMATCH,
                            "value %r differs from the protocol's %r"
                            % (rv, got), chan=ch.cid, side=side, tid=tid)
        return theta

    def _unify(self, w, rv: Value, flex, theta, pending) -> bool:
        w = fold_term(subst_term(w, theta))
        c = w.__class__
        if c is TVar and w.name in flex:
            if w.name in theta:
                return self._unify(theta[w.name], rv, flex, theta, pending)
            theta[w.name] = TLit(rv)
            return True
        if c is TLit:
            eq = value_eq(w.v, rv)
            if eq is None:
                return w.v is rv
            return eq
        if c is TPair:
            if rv.__class__ is not VPair:
                return False
            return (self._unify(w.a, rv.a, flex, theta, pending)
                    and self._unify(w.b, rv.b, flex, theta, pending))
        free = term_free_vars(w) & flex
        if free - set(theta):
            pending.append((w, rv))
            return True
        got = eval_term(w, None)
        if got is None or isinstance(got, tuple):
            pending.append((w, rv))
            return True
        return value_eq(got, rv) is True

    # -- payload verification --------------------------------------------------

    def _verify_payload(self, cfg, ch, side, tid, atoms, theta):
        heap = cfg.heap
        locs: List[int] = []
        eps: List[tuple] = []
        for atom in atoms:
            a = subst_atom(atom, theta)
            self._verify_atom(cfg, ch, side, tid, a, heap, locs, eps)
        return tuple(locs), tuple(eps)

    def _verify_atom(self, cfg, ch, side, tid, a: Atom, heap, locs, eps):
        c = a.__class__
        fail = lambda d: self._abort(cfg, PREDICATE_FALSE, d, chan=ch.cid,
                                     side=side, tid=tid)
        if c is Guard:
            cond = eval_term(fold_term(a.cond), None)
            if not isinstance(cond, VBool):
                fail("guard %r cannot be decided" % (a.cond,))
            if cond.b:
                self._verify_atom(cfg, ch, side, tid, a.atom, heap, locs, eps)
            return
        if c is PureP:
            v = eval_term(fold_term(a.term), None)
            if not isinstance(v, VBool):
                fail("formula %r cannot be decided" % (a.term,))
            if not v.b:
                fail("formula %r is false" % (a.term,))
            return
        if c in (Sorted, Perm):
            out = eval_term(fold_term(a.out), None)
            inp = eval_term(fold_term(a.inp), None)
            if not (isinstance(out, tuple) and isinstance(inp, tuple)):
                fail("list fact %r cannot be decided" % (a,))
            if not _is_perm_v(out, inp):
                fail("%r is not a permutation of %r" % (out, inp))
            if c is Sorted and not _is_ascending(out):
                fail("%r is not sorted" % (out,))
            return
        if c is Trusted:
            self.trust_log.append(a.tag)
            return
        if c is PointsTo:
            lv = eval_term(fold_term(a.loc), None)
            if lv is None or lv.__class__ is not VLoc:
                fail("heap assertion names no location: %r" % (a,))
            cell = heap.cells.get(lv.i)
            if cell is None:
                fail("location %d is not allocated" % lv.i)
            want = eval_term(fold_term(a.val), None)
            if want is None or isinstance(want, tuple):
                fail("cell content %r cannot be decided" % (a.val,))
            if value_eq(cell, want) is not True:
                fail("location %d holds %r, not %r" % (lv.i, cell, want))
            locs.append(lv.i)
            return
        if c in (LList, LListNoOwn):
            lv = eval_term(fold_term(a.loc), None)
            if lv is None or lv.__class__ is not VLoc:
                fail("list assertion names no location: %r" % (a,))
            walked = read_list(heap, lv.i)
            if walked is None:
                fail("no linked list at location %d" % lv.i)
            items, cells = walked
            want = eval_term(fold_term(a.items), None)
            if not isinstance(want, tuple):
                fail("list contents %r cannot be decided" % (a.items,))
            if len(want) != len(items) or any(
                    value_eq(x, y) is not True for x, y in zip(items, want)):
                fail("list at %d holds %r, not %r" % (lv.i, items, want))
            locs.extend(cells)
            return
        if c is ChanOwn:
            ev = eval_term(fold_term(a.endpoint), None)
            key = _ep_key(ev) if isinstance(ev, Value) else None
            hit = self.endpoints.get(key) if key else None
            if hit is None:
                fail("%r does not denote a channel endpoint" % (a.endpoint,))
            cid2, side2 = hit
            stated = fold_protocol(a.proto)
            current = self.channels[cid2].prot[side2]
            if current is not None:
                v = check_subprot(current, stated, fuel=self.check_fuel)
                if not v.is_yes:
                    fail("endpoint's protocol does not weaken to the "
                         "stated one (%s)" % v.kind)
            eps.append((cid2, side2, stated))
            return
        fail("unsupported payload assertion %r" % (a,))


def _is_perm_v(out: tuple, inp: tuple) -> bool:
    from .protocol.terms import sval_repr
    if len(out) != len(inp):
        return False
    return sorted(map(sval_repr, out)) == sorted(map(sval_repr, inp))


def _is_ascending(out: tuple) -> bool:
    from .lang.ast import VInt
    ns = [v.n for v in out if isinstance(v, VInt)]
    return len(ns) == len(out) and all(
        ns[i] <= ns[i + 1] for i in range(len(ns) - 1))


# ---------------------------------------------------------------------------
# Consistency of a mirrored channel state

def consistent_check(ch: ChannelState, bound: int = 8) -> bool:
    """Search for an alignment of the two protocol views with the messages
    currently in flight.  Each view first absorbs the values addressed to
    it (its own unperformed sends may be skipped, up to `bound`); the
    settled views must then be mutually dual, up to weakening."""
    pl, pr = ch.prot["L"], ch.prot["R"]
    if pl is None or pr is None:
        return True
    lefts = _absorb(pl, [m.value for m in ch.bufs["R"]], bound)
    rights = _absorb(pr, [m.value for m in ch.bufs["L"]], bound)
    for a in lefts:
        da = dual(a)
        for b in rights:
            if canon_key(b) == canon_key(da):
                return True
            if check_subprot(b, da).is_yes or check_subprot(da, b).is_yes:
                return True
    return False


def _absorb(p: Protocol, values: List[Value], bound: int) -> List[Protocol]:
    """Possible views after receiving `values`, skipping pending sends."""
    out: List[Protocol] = []
    seen = set()
    work = [(p, 0, bound)]
    while work and len(out) < 64:
        cur, idx, budget = work.pop()
        try:
            cur, _ = normalize_head(cur)
        except ProtocolError:
            continue
        if idx == len(values):
            k = canon_key(cur)
            if k not in seen:
                seen.add(k)
                out.append(fold_protocol(cur))
            continue
        c = cur.__class__
        if c is End:
            continue
        if c is Cond:
            if budget > 0:
                work.append((cur.then, idx, budget - 1))
                work.append((cur.els, idx, budget - 1))
            continue
        if cur.action == "!":
            if budget > 0:
                env = {n: TSko(-(budget + idx * 97), n)
                       for n, _ in cur.binders}
                work.append((subst_binders(cur.tail, env), idx, budget - 1))
            continue
        # receive head: the next pending value must fit it
        flex = {n for n, _ in cur.binders}
        theta: Dict[str, object] = {}
        if _ground_unify(cur.value, values[idx], flex, theta):
            env = dict(theta)
            for n, _ in cur.binders:
                if n not in env:
                    env[n] = TSko(-(idx + 1) * 131 - budget, n)
            work.append((subst_binders(cur.tail, env), idx + 1, budget))
    return out


def _ground_unify(w, rv: Value, flex, theta) -> bool:
    w = fold_term(subst_term(w, theta))
    if w.__class__ is TVar and w.name in flex:
        theta[w.name] = TLit(rv)
        return True
    if w.__class__ is TPair:
        if rv.__class__ is not VPair:
            return False
        return (_ground_unify(w.a, rv.a, flex, theta)
                and _ground_unify(w.b, rv.b, flex, theta))
    got = eval_term(w, None)
    if got is None or isinstance(got, tuple):
        return True  # cannot decide; stay permissive
    return value_eq(got, rv) is True


def emit_trace(events) -> int:
    """Digest of a recorded event stream; see the machine's event mixing."""
    return trace_hash_of(events)
