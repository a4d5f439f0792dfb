"""Small-step interpreter: threads, scheduler, heap effects, event stream.

Each thread keeps its evaluation context as an explicit frame stack so one
head reduction costs a handful of list operations instead of a tree rebuild.
Between scheduler picks every running thread is parked exactly at its next
head redex; a pick therefore performs exactly one head reduction.

Scheduling is deterministic given the seed: the random scheduler draws one
number per pick from a splitmix64 stream (no draw when only one thread can
run), the round-robin scheduler cycles through runnable threads in spawn
order.
"""

from __future__ import annotations

from typing import Callable, Optional

from .ast import (
    EApp, EBinOp, EBranch, ECAS, EFork, EFst, EHook, EIf, EInj, ELoad,
    EMatch, EPair, ERec, ERef, ESelect, ESnd, EStore, EVal, EVar, Expr,
    FALSE, Heap, TRUE, UNIT, Value, VBool, VClo, VInj, VInt, VLoc, VPair,
    as_value, substitute, value_eq,
)

MASK64 = (1 << 64) - 1


class SplitMix64:
    """splitmix64 pseudo-random stream; tiny, fast, and well documented."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


# Event kind codes.  Small ints keep the trace hash cheap.
EV_ALLOC = 1
EV_LOAD = 2
EV_STORE = 3
EV_CAS = 4
EV_FORK = 5
EV_NEW_CHAN = 6
EV_CHAN_LABEL = 7
EV_SEND = 8
EV_RECV = 9

EVENT_NAMES = {
    EV_ALLOC: "alloc",
    EV_LOAD: "load",
    EV_STORE: "store",
    EV_CAS: "cas",
    EV_FORK: "fork",
    EV_NEW_CHAN: "new_chan",
    EV_CHAN_LABEL: "chan_label",
    EV_SEND: "send",
    EV_RECV: "recv",
}

HOOK_KIND_CODES = {
    "new_chan": EV_NEW_CHAN,
    "chan_label": EV_CHAN_LABEL,
    "send": EV_SEND,
    "recv": EV_RECV,
}

# Frame tags (see drive/reduce).
F_APP_ARG = 0   # (tag, fn_expr)
F_APP_FN = 1    # (tag, arg_value)
F_BIN_R = 2     # (tag, op, left_expr)
F_BIN_L = 3     # (tag, op, right_value)
F_PAIR_B = 4    # (tag, first_expr)
F_PAIR_A = 5    # (tag, second_value)
F_FST = 6
F_SND = 7
F_IF = 8        # (tag, then_expr, else_expr)
F_INJ = 9       # (tag, which)
F_MATCH = 10    # (tag, xl, el, xr, er)
F_REF = 11
F_LOAD = 12
F_STORE_V = 13  # (tag, target_expr)
F_STORE_T = 14  # (tag, stored_value)
F_CAS_NEW = 15  # (tag, loc_expr, old_expr)
F_CAS_OLD = 16  # (tag, loc_expr, new_value)
F_CAS_LOC = 17  # (tag, old_value, new_value)
F_HOOK = 18     # (tag, kind, label, pending_exprs, done_values_reversed)

RUNNING = 0
DONE = 1
STUCK = 2


class StuckThread(Exception):
    """Raised inside a step when a thread reaches an irreducible non-value."""

    def __init__(self, tid: int, detail: str):
        super().__init__("thread %d stuck: %s" % (tid, detail))
        self.tid = tid
        self.detail = detail


class MonitorAbort(Exception):
    """Raised by an observer to abort the run; carries the observer's record."""

    def __init__(self, record):
        super().__init__(str(record))
        self.record = record


class Thread:
    __slots__ = ("tid", "ctrl", "is_val", "frames", "status")

    def __init__(self, tid: int, expr: Expr):
        self.tid = tid
        self.ctrl = expr
        self.is_val = False
        self.frames: list = []
        self.status = RUNNING

    def value(self) -> Optional[Value]:
        if self.status == DONE:
            return self.ctrl
        return None

    def expression(self) -> Expr:
        """Reconstruct the thread's whole expression from focus and frames."""
        e = EVal(self.ctrl) if self.is_val else self.ctrl
        for fr in reversed(self.frames):
            tag = fr[0]
            if tag == F_APP_ARG:
                e = EApp(fr[1], e)
            elif tag == F_APP_FN:
                e = EApp(e, EVal(fr[1]))
            elif tag == F_BIN_R:
                e = EBinOp(fr[1], fr[2], e)
            elif tag == F_BIN_L:
                e = EBinOp(fr[1], e, EVal(fr[2]))
            elif tag == F_PAIR_B:
                e = EPair(fr[1], e)
            elif tag == F_PAIR_A:
                e = EPair(e, EVal(fr[1]))
            elif tag == F_FST:
                e = EFst(e)
            elif tag == F_SND:
                e = ESnd(e)
            elif tag == F_IF:
                e = EIf(e, fr[1], fr[2])
            elif tag == F_INJ:
                e = EInj(fr[1], e)
            elif tag == F_MATCH:
                e = EMatch(e, fr[1], fr[2], fr[3], fr[4])
            elif tag == F_REF:
                e = ERef(e)
            elif tag == F_LOAD:
                e = ELoad(e)
            elif tag == F_STORE_V:
                e = EStore(fr[1], e)
            elif tag == F_STORE_T:
                e = EStore(e, EVal(fr[1]))
            elif tag == F_CAS_NEW:
                e = ECAS(fr[1], fr[2], e)
            elif tag == F_CAS_OLD:
                e = ECAS(fr[1], e, EVal(fr[2]))
            elif tag == F_CAS_LOC:
                e = ECAS(e, EVal(fr[1]), EVal(fr[2]))
            elif tag == F_HOOK:
                args = list(fr[3]) + [e] + [EVal(v) for v in reversed(fr[4])]
                e = EHook(fr[1], fr[2], args)
            else:
                raise AssertionError("bad frame %r" % (fr,))
        return e


class Config:
    """Complete interpreter state: thread pool, heap, scheduler, trace."""

    def __init__(self, main: Expr, seed: int = 1, scheduler: str = "random",
                 max_steps: int = 10 ** 6,
                 observer: Optional[Callable] = None,
                 record_events: bool = False):
        if scheduler not in ("random", "round-robin"):
            raise ValueError("unknown scheduler %r" % scheduler)
        self.heap = Heap()
        self.threads = [Thread(0, main)]
        self.runnable = [self.threads[0]]
        self.rng = SplitMix64(seed)
        self.scheduler = scheduler
        self.max_steps = max_steps
        self.step_count = 0
        self.observer = observer
        self.record_events = record_events
        self.events: list = []
        self.trace_hash = 0xCBF29CE484222325
        self._rr_next = 0
        _drive(self, self.threads[0])

    @property
    def rng_state(self) -> int:
        return self.rng.state

    # -- event stream -----------------------------------------------------

    def _mix(self, w: int) -> None:
        self.trace_hash = ((self.trace_hash ^ (w & MASK64)) * 0x100000001B3) & MASK64

    def _mix_value(self, v: Value) -> None:
        t = v.__class__
        if t is VInt:
            self._mix(1)
            self._mix(v.n & MASK64)
            self._mix(1 if v.n < 0 else 0)
        elif t is VBool:
            self._mix(2)
            self._mix(1 if v.b else 0)
        elif t is VLoc:
            self._mix(4)
            self._mix(v.i)
        elif t is VPair:
            self._mix(5)
            self._mix_value(v.a)
            self._mix_value(v.b)
        elif t is VInj:
            self._mix(6)
            self._mix(v.which)
            self._mix_value(v.v)
        elif t is VClo:
            self._mix(7)
        else:
            self._mix(3)  # unit

    def emit(self, kind: int, tid: int, payload: tuple) -> None:
        self._mix(kind)
        self._mix(tid)
        for p in payload:
            if isinstance(p, bool):
                self._mix(1 if p else 0)
            elif isinstance(p, int):
                self._mix(p)
            elif isinstance(p, str):
                for b in p.encode("utf-8"):
                    self._mix(b)
            elif isinstance(p, Value):
                self._mix_value(p)
            else:
                raise AssertionError("bad event payload %r" % (p,))
        self._mix(0x9E3779B97F4A7C15)  # event separator
        if self.record_events:
            self.events.append((kind, tid, payload))
        if self.observer is not None:
            self.observer(self, kind, tid, payload)

    # -- spawning ----------------------------------------------------------

    def spawn(self, expr: Expr) -> Thread:
        th = Thread(len(self.threads), expr)
        self.threads.append(th)
        _drive(self, th)
        if th.status == RUNNING:
            self.runnable.append(th)
        elif th.status == STUCK:
            raise StuckThread(th.tid, "stuck at spawn")
        return th


def _drive(cfg: Config, th: Thread) -> None:
    """Advance administrative work until th is parked at a head redex,
    becomes a value (DONE), or is found irreducible (STUCK)."""
    frames = th.frames
    ctrl = th.ctrl
    is_val = th.is_val
    while True:
        if is_val:
            if not frames:
                th.status = DONE
                break
            fr = frames[-1]
            tag = fr[0]
            if tag == F_PAIR_A:
                frames.pop()
                ctrl = VPair(ctrl, fr[1])
            elif tag == F_INJ:
                frames.pop()
                ctrl = VInj(fr[1], ctrl)
            elif tag == F_APP_ARG:
                frames.pop()
                frames.append((F_APP_FN, ctrl))
                ctrl = fr[1]
                is_val = False
            elif tag == F_BIN_R:
                frames.pop()
                frames.append((F_BIN_L, fr[1], ctrl))
                ctrl = fr[2]
                is_val = False
            elif tag == F_PAIR_B:
                frames.pop()
                frames.append((F_PAIR_A, ctrl))
                ctrl = fr[1]
                is_val = False
            elif tag == F_STORE_V:
                frames.pop()
                frames.append((F_STORE_T, ctrl))
                ctrl = fr[1]
                is_val = False
            elif tag == F_CAS_NEW:
                frames.pop()
                frames.append((F_CAS_OLD, fr[1], ctrl))
                ctrl = fr[2]
                is_val = False
            elif tag == F_CAS_OLD:
                frames.pop()
                frames.append((F_CAS_LOC, ctrl, fr[2]))
                ctrl = fr[1]
                is_val = False
            elif tag == F_HOOK:
                pending = fr[3]
                fr[4].append(ctrl)
                if pending:
                    ctrl = pending.pop()
                    is_val = False
                else:
                    break  # hook redex complete
            else:
                break  # value plugs a redex-completing frame
        else:
            t = ctrl.__class__
            if t is EVal:
                ctrl = ctrl.v
                is_val = True
            elif t is ERec:
                ctrl = VClo(ctrl.f, ctrl.x, ctrl.body)
                is_val = True
            elif t is EVar:
                th.status = STUCK
                break
            elif t is EApp:
                frames.append((F_APP_ARG, ctrl.fn))
                ctrl = ctrl.arg
            elif t is EBinOp:
                frames.append((F_BIN_R, ctrl.op, ctrl.l))
                ctrl = ctrl.r
            elif t is EPair:
                frames.append((F_PAIR_B, ctrl.a))
                ctrl = ctrl.b
            elif t is EFst:
                frames.append((F_FST,))
                ctrl = ctrl.e
            elif t is ESnd:
                frames.append((F_SND,))
                ctrl = ctrl.e
            elif t is EIf:
                frames.append((F_IF, ctrl.then, ctrl.els))
                ctrl = ctrl.cond
            elif t is EInj:
                frames.append((F_INJ, ctrl.which))
                ctrl = ctrl.e
            elif t is EMatch:
                frames.append((F_MATCH, ctrl.xl, ctrl.el, ctrl.xr, ctrl.er))
                ctrl = ctrl.scrut
            elif t is ERef:
                frames.append((F_REF,))
                ctrl = ctrl.e
            elif t is ELoad:
                frames.append((F_LOAD,))
                ctrl = ctrl.e
            elif t is EStore:
                frames.append((F_STORE_V, ctrl.tgt))
                ctrl = ctrl.val
            elif t is ECAS:
                frames.append((F_CAS_NEW, ctrl.loc, ctrl.old))
                ctrl = ctrl.new
            elif t is EFork:
                break  # fork is a redex without evaluated children
            elif t is EHook:
                if ctrl.args:
                    frames.append((F_HOOK, ctrl.kind, ctrl.label,
                                   list(ctrl.args[:-1]), []))
                    ctrl = ctrl.args[-1]
                else:
                    break
            elif t is ESelect or t is EBranch:
                th.status = STUCK  # surface forms must be desugared first
                break
            else:
                th.status = STUCK
                break
    th.ctrl = ctrl
    th.is_val = is_val


def _reduce(cfg: Config, th: Thread) -> None:
    """Perform the single head reduction th is parked at, then re-park."""
    ctrl = th.ctrl
    if not th.is_val:
        t = ctrl.__class__
        if t is EFork:
            child = cfg.spawn(ctrl.e)
            cfg.emit(EV_FORK, th.tid, (child.tid,))
            th.ctrl = UNIT
            th.is_val = True
        elif t is EHook:
            cfg.emit(HOOK_KIND_CODES[ctrl.kind], th.tid, (ctrl.label,) if ctrl.label is not None else ())
            th.ctrl = UNIT
            th.is_val = True
        else:
            raise AssertionError("parked at non-redex %r" % ctrl)
        _drive(cfg, th)
        return

    fr = th.frames.pop()
    tag = fr[0]
    v = ctrl
    if tag == F_APP_FN:
        if v.__class__ is not VClo:
            raise StuckThread(th.tid, "applied a non-function")
        body = substitute(v.body, v.x, fr[1])
        body = substitute(body, v.f, v)
        th.ctrl = body
        th.is_val = False
    elif tag == F_BIN_L:
        op = fr[1]
        rv = fr[2]
        if op == "+":
            if v.__class__ is not VInt or rv.__class__ is not VInt:
                raise StuckThread(th.tid, "+ on non-integers")
            th.ctrl = VInt(v.n + rv.n)
        elif op == "-":
            if v.__class__ is not VInt or rv.__class__ is not VInt:
                raise StuckThread(th.tid, "- on non-integers")
            th.ctrl = VInt(v.n - rv.n)
        elif op == "*":
            if v.__class__ is not VInt or rv.__class__ is not VInt:
                raise StuckThread(th.tid, "* on non-integers")
            th.ctrl = VInt(v.n * rv.n)
        elif op == "<":
            if v.__class__ is not VInt or rv.__class__ is not VInt:
                raise StuckThread(th.tid, "< on non-integers")
            th.ctrl = TRUE if v.n < rv.n else FALSE
        elif op == "<=":
            if v.__class__ is not VInt or rv.__class__ is not VInt:
                raise StuckThread(th.tid, "<= on non-integers")
            th.ctrl = TRUE if v.n <= rv.n else FALSE
        elif op == "=":
            r = value_eq(v, rv)
            if r is None:
                raise StuckThread(th.tid, "= on incomparable values")
            th.ctrl = TRUE if r else FALSE
        else:
            raise StuckThread(th.tid, "unknown operator %s" % op)
    elif tag == F_FST:
        if v.__class__ is not VPair:
            raise StuckThread(th.tid, "fst of a non-pair")
        th.ctrl = v.a
    elif tag == F_SND:
        if v.__class__ is not VPair:
            raise StuckThread(th.tid, "snd of a non-pair")
        th.ctrl = v.b
    elif tag == F_IF:
        if v.__class__ is not VBool:
            raise StuckThread(th.tid, "if on a non-boolean")
        th.ctrl = fr[1] if v.b else fr[2]
        th.is_val = False
    elif tag == F_MATCH:
        if v.__class__ is not VInj:
            raise StuckThread(th.tid, "match on a non-injection")
        if v.which == 1:
            th.ctrl = substitute(fr[2], fr[1], v.v)
        else:
            th.ctrl = substitute(fr[4], fr[3], v.v)
        th.is_val = False
    elif tag == F_REF:
        loc = cfg.heap.alloc(v)
        cfg.emit(EV_ALLOC, th.tid, (loc,))
        th.ctrl = VLoc(loc)
    elif tag == F_LOAD:
        if v.__class__ is not VLoc:
            raise StuckThread(th.tid, "load from a non-location")
        cell = cfg.heap.cells.get(v.i, _MISSING)
        if cell is _MISSING:
            raise StuckThread(th.tid, "load from an unallocated location")
        cfg.emit(EV_LOAD, th.tid, (v.i,))
        th.ctrl = cell
    elif tag == F_STORE_T:
        if v.__class__ is not VLoc or v.i not in cfg.heap.cells:
            raise StuckThread(th.tid, "store to a bad location")
        cfg.heap.cells[v.i] = fr[1]
        cfg.emit(EV_STORE, th.tid, (v.i,))
        th.ctrl = UNIT
    elif tag == F_CAS_LOC:
        if v.__class__ is not VLoc or v.i not in cfg.heap.cells:
            raise StuckThread(th.tid, "CAS on a bad location")
        cur = cfg.heap.cells[v.i]
        r = value_eq(cur, fr[1])
        if r is None:
            raise StuckThread(th.tid, "CAS on incomparable values")
        if r:
            cfg.heap.cells[v.i] = fr[2]
        cfg.emit(EV_CAS, th.tid, (v.i, r))
        th.ctrl = TRUE if r else FALSE
    elif tag == F_HOOK:
        args = tuple(reversed(fr[4]))
        cfg.emit(HOOK_KIND_CODES[fr[1]], th.tid,
                 ((fr[2],) if fr[2] is not None else ()) + args)
        th.ctrl = UNIT
    else:
        raise AssertionError("reduce on administrative frame %r" % (fr,))
    _drive(cfg, th)


_MISSING = object()


def trace_hash_of(events) -> int:
    """Recompute the 64-bit order-sensitive digest of a recorded event list."""
    cfg = Config.__new__(Config)
    cfg.trace_hash = 0xCBF29CE484222325
    cfg.record_events = False
    cfg.observer = None
    for kind, tid, payload in events:
        cfg.emit(kind, tid, payload)
    return cfg.trace_hash


def thread_step(cfg: Config, tid: int) -> bool:
    """One head reduction in thread tid.  Returns False if it cannot step."""
    th = cfg.threads[tid]
    if th.status != RUNNING:
        return False
    try:
        _reduce(cfg, th)
    except StuckThread:
        th.status = STUCK
        if th in cfg.runnable:
            cfg.runnable.remove(th)
        raise
    cfg.step_count += 1
    if th.status != RUNNING:
        cfg.runnable.remove(th)
    return True


def pool_step(cfg: Config) -> Optional[Thread]:
    """Pick a runnable thread per the scheduler and step it once.

    Returns the stepped thread, or None when nothing can run.
    """
    n = len(cfg.runnable)
    if n == 0:
        return None
    if n == 1:
        th = cfg.runnable[0]
    elif cfg.scheduler == "random":
        th = cfg.runnable[cfg.rng.next() % n]
    else:
        cfg._rr_next %= n
        th = cfg.runnable[cfg._rr_next]
        cfg._rr_next += 1
    thread_step(cfg, th.tid)
    return th


class RunResult:
    """Outcome of a run: status is done, stuck, timeout, or violation."""

    __slots__ = ("status", "value", "heap", "step_count", "trace_hash",
                 "events", "violation", "stuck_tid", "config")

    def __init__(self, status, value, cfg: Config, violation=None,
                 stuck_tid=None):
        self.status = status
        self.value = value
        self.heap = cfg.heap.cells
        self.step_count = cfg.step_count
        self.trace_hash = cfg.trace_hash
        self.events = cfg.events
        self.violation = violation
        self.stuck_tid = stuck_tid
        self.config = cfg

    def __repr__(self) -> str:
        return "<RunResult %s %r steps=%d>" % (self.status, self.value,
                                               self.step_count)


def run(main: Expr, seed: int = 1, scheduler: str = "random",
        max_steps: int = 10 ** 6, observer=None,
        record_events: bool = False) -> RunResult:
    """Run a program to completion of its main thread.

    A thread reaching an irreducible non-value anywhere in the pool aborts
    the whole run as stuck: the corpus has no benign dead threads, so this
    catches bugs that would otherwise hide in abandoned workers.
    """
    cfg = Config(main, seed=seed, scheduler=scheduler, max_steps=max_steps,
                 observer=observer, record_events=record_events)
    main_th = cfg.threads[0]
    while True:
        if main_th.status == DONE:
            return RunResult("done", main_th.ctrl, cfg)
        if not cfg.runnable:
            return RunResult("stuck", None, cfg, stuck_tid=0)
        if cfg.step_count >= cfg.max_steps:
            return RunResult("timeout", None, cfg)
        try:
            stepped = pool_step(cfg)
        except StuckThread as st:
            return RunResult("stuck", None, cfg, stuck_tid=st.tid)
        except MonitorAbort as ma:
            return RunResult("violation", None, cfg, violation=ma.record)
        if stepped is not None and stepped.status == STUCK:
            return RunResult("stuck", None, cfg, stuck_tid=stepped.tid)


def _is_redex_with_value_children(e: Expr) -> bool:
    t = e.__class__
    if t is EApp:
        return as_value(e.fn) is not None and as_value(e.arg) is not None
    if t is EBinOp:
        return as_value(e.l) is not None and as_value(e.r) is not None
    if t in (EFst, ESnd, ERef, ELoad):
        return as_value(e.e) is not None
    if t is EIf:
        return as_value(e.cond) is not None
    if t is EMatch:
        return as_value(e.scrut) is not None
    if t is EStore:
        return as_value(e.tgt) is not None and as_value(e.val) is not None
    if t is ECAS:
        return all(as_value(s) is not None for s in (e.loc, e.old, e.new))
    if t is EFork:
        return True
    if t is EHook:
        return all(as_value(a) is not None for a in e.args)
    return False


def head_step(e: Expr, heap: Heap):
    """Reduce e, which must itself be a head redex with value children.

    Returns (expr', spawned_exprs).  The heap is mutated.  This is a thin
    harness over the same reduction code the scheduler uses, for tests and
    tools that want a single rule application.
    """
    if not _is_redex_with_value_children(e):
        raise ValueError("head_step: %r is not a head redex" % e)
    cfg = Config.__new__(Config)
    cfg.heap = heap
    cfg.threads = []
    cfg.runnable = []
    cfg.rng = SplitMix64(0)
    cfg.scheduler = "random"
    cfg.max_steps = 1
    cfg.step_count = 0
    cfg.observer = None
    cfg.record_events = False
    cfg.events = []
    cfg.trace_hash = 0xCBF29CE484222325
    cfg._rr_next = 0
    th = Thread(0, e)
    cfg.threads.append(th)
    _drive(cfg, th)
    if th.status == STUCK:
        raise StuckThread(0, "no applicable rule")
    spawned_mark = len(cfg.threads)
    _reduce(cfg, th)
    spawned = [t.expression() for t in cfg.threads[spawned_mark:]]
    return th.expression(), spawned
