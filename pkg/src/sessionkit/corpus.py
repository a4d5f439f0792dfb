"""Executable example suite: programs, their protocols, and result checks.

Each entry bundles a program source, the protocol attached to every channel
label the program uses, and a predicate over the finished run.  Entries with
inputs expose a sampler so a harness can draw randomized trials; calling
`case()` with no generator yields a fixed default case.

The checks are deliberately independent of the monitor: they read the final
heap directly (via read_list) and compare against plain Python references.
"""

from __future__ import annotations

import random
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .lang.ast import VInt, VLoc, VPair, Value
from .lang.machine import RunResult, run
from .monitor import Monitor, read_list
from .prelude import prepare
from .protocol.ast import Protocol
from .protocol.parser import parse_protocol


# ---------------------------------------------------------------------------
# Source assembly helpers

def _int_list(var: str, xs: Sequence[int]) -> str:
    """An expression building a linked list of integer literals."""
    parts = ['let: "%s" := lnil #() in' % var]
    for x in xs:
        parts.append('(lsnoc "%s" #%d) ;;' % (var, x))
    parts.append('"%s"' % var)
    return "(" + " ".join(parts) + ")"


def _pair_list(var: str, kvs: Sequence[Tuple[int, int]]) -> str:
    parts = ['let: "%s" := lnil #() in' % var]
    for k, v in kvs:
        parts.append('(lsnoc "%s" (#%d, #%d)) ;;' % (var, k, v))
    parts.append('"%s"' % var)
    return "(" + " ".join(parts) + ")"


def _nested_list(var: str, xss: Sequence[Sequence[int]]) -> str:
    parts = ['let: "%s" := lnil #() in' % var]
    for i, xs in enumerate(xss):
        inner = _int_list("%s_%d" % (var, i), xs)
        parts.append('(lsnoc "%s" %s) ;;' % (var, inner))
    parts.append('"%s"' % var)
    return "(" + " ".join(parts) + ")"


def _py(v: Value):
    """Final-heap values as plain Python data (pairs become tuples)."""
    if isinstance(v, VInt):
        return v.n
    if isinstance(v, VPair):
        return (_py(v.a), _py(v.b))
    if isinstance(v, VLoc):
        return ("loc", v.i)
    return repr(v)


def _read_ints(result: RunResult, loc: int) -> Optional[List[int]]:
    walked = read_list(result.config.heap, loc)
    if walked is None:
        return None
    out = []
    for v in walked[0]:
        if not isinstance(v, VInt):
            return None
        out.append(v.n)
    return out


def _read_values(result: RunResult, loc: int) -> Optional[list]:
    walked = read_list(result.config.heap, loc)
    if walked is None:
        return None
    return [_py(v) for v in walked[0]]


def _multiset(xs) -> dict:
    out: dict = {}
    for x in xs:
        out[x] = out.get(x, 0) + 1
    return out


# ---------------------------------------------------------------------------
# Cases and entries

class Case:
    """One concrete runnable instance of an entry."""

    __slots__ = ("name", "source", "protocol_texts", "protocols", "check",
                 "max_steps", "inputs")

    def __init__(self, name: str, source: str,
                 protocol_texts: Dict[str, str],
                 check: Callable[[RunResult, Optional[Monitor]], Optional[str]],
                 max_steps: int = 10 ** 6, inputs=None):
        self.name = name
        self.source = source
        self.protocol_texts = dict(protocol_texts)
        self.protocols: Dict[str, Protocol] = {
            label: parse_protocol(text)
            for label, text in protocol_texts.items()}
        self.check = check
        self.max_steps = max_steps
        self.inputs = inputs


class CorpusEntry:
    __slots__ = ("name", "summary", "tags", "_build", "_sample")

    def __init__(self, name: str, summary: str, tags: Tuple[str, ...],
                 build: Callable[..., Case],
                 sample: Optional[Callable[[random.Random], tuple]] = None):
        self.name = name
        self.summary = summary
        self.tags = tags
        self._build = build
        self._sample = sample

    def case(self, rng: Optional[random.Random] = None) -> Case:
        if self._sample is None or rng is None:
            return self._build()
        return self._build(*self._sample(rng))


def run_case(case: Case, seed: int = 1, scheduler: str = "random",
             max_steps: Optional[int] = None, ownership: str = "relaxed",
             auto_swap: bool = True, monitored: bool = True):
    """Run a case; returns (result, monitor_or_None, failure_or_None)."""
    expr = prepare(case.source)
    mon = Monitor(case.protocols, ownership=ownership,
                  auto_swap=auto_swap) if monitored else None
    result = run(expr, seed=seed, scheduler=scheduler,
                 max_steps=max_steps or case.max_steps, observer=mon)
    if result.status == "violation":
        return result, mon, "violation: %r" % (result.violation,)
    if result.status != "done":
        return result, mon, "run ended with status %s" % result.status
    return result, mon, case.check(result, mon)


# ---------------------------------------------------------------------------
# Shared service definitions (object-language library text)

# In-place merge sort over a linked list; jobs are recursively forked pairs
# of sub-services connected by channels.
SORT_SERVICE = '''
let: "sort_service" := (rec: "sort_service" "cmp" "c" :=
  let: "l" := recv "c" in
  if: llength "l" <= #1 then send "c" #()
  else
    let: "l2" := lsplit "l" in
    let: "c1" := start @"sort" ("sort_service" "cmp") in
    let: "c2" := start @"sort" ("sort_service" "cmp") in
    (send "c1" "l") ;;
    (send "c2" "l2") ;;
    (recv "c1") ;;
    (recv "c2") ;;
    (lmerge "cmp" "l" "l2") ;;
    send "c" #()) in
'''

SORT_PROT = ('<! (xs : list int) (l : loc)> MSG l {{ llist(l, xs) }}; '
             '<? (ys : list int)> MSG () {{ llist(l, ys) * sorted(ys, xs) }}; '
             'END')

INT_LE = 'let: "cmp" := (λ: "a" "b", "a" <= "b") in'

# Element-streaming merge sort: values travel one at a time in both
# directions, with a boolean flag framing each one.
SORT_SERVICE_FG = '''
let: "transfer" := (rec: "transfer" "c1" "c" :=
  branch "c1" {
    let: "x" := recv "c1" in
    (select "c" left) ;; (send "c" "x") ;; ("transfer" "c1" "c")
  } { select "c" right }) in
let: "merge_fg_aux" := (rec: "merge_fg_aux" "cmp" "c" "x" "c1" "c2" :=
  branch "c2" {
    let: "y" := recv "c2" in
    if: "cmp" "x" "y"
    then ((select "c" left) ;; (send "c" "x") ;;
          ("merge_fg_aux" "cmp" "c" "y" "c2" "c1"))
    else ((select "c" left) ;; (send "c" "y") ;;
          ("merge_fg_aux" "cmp" "c" "x" "c1" "c2"))
  } {
    (select "c" left) ;; (send "c" "x") ;; (transfer "c1" "c")
  }) in
let: "merge_fg" := (λ: "cmp" "c" "c1" "c2",
  branch "c1" {
    let: "x" := recv "c1" in
    "merge_fg_aux" "cmp" "c" "x" "c1" "c2"
  } { assert: #false }) in
let: "split_fg" := (rec: "split_fg" "c" "c1" "c2" :=
  branch "c" {
    let: "x" := recv "c" in
    (select "c1" left) ;; (send "c1" "x") ;;
    ("split_fg" "c" "c2" "c1")
  } {
    (select "c1" right) ;; (select "c2" right)
  }) in
let: "sort_service_fg" := (rec: "sort_service_fg" "cmp" "c" :=
  branch "c" {
    let: "x1" := recv "c" in
    branch "c" {
      let: "x2" := recv "c" in
      let: "c1" := start @"LBL" ("sort_service_fg" "cmp") in
      let: "c2" := start @"LBL" ("sort_service_fg" "cmp") in
      (select "c1" left) ;; (send "c1" "x1") ;;
      (select "c2" left) ;; (send "c2" "x2") ;;
      ("split_fg" "c" "c1" "c2") ;;
      ("merge_fg" "cmp" "c" "c1" "c2")
    } {
      (select "c" left) ;; (send "c" "x1") ;; (select "c" right)
    }
  } { select "c" right }) in
'''

SEND_ALL = '''
let: "send_all" := (rec: "send_all" "c" "l" :=
  if: lisnil "l" then #()
  else ((select "c" left) ;; (send "c" (lpop "l")) ;; ("send_all" "c" "l"))) in
'''

RECV_ALL = '''
let: "recv_all" := (rec: "recv_all" "c" "l" :=
  branch "c" { (lsnoc "l" (recv "c")) ;; ("recv_all" "c" "l") } { #() }) in
'''

RECV_N = '''
let: "recvN" := (rec: "recvN" "c" "l" "n" :=
  if: "n" <= #0 then #()
  else ((lsnoc "l" (recv "c")) ;; ("recvN" "c" "l" ("n" - #1)))) in
'''

# Streamed sort from the consumer's side: a phase of framed sends whose
# history accumulates in xs, then a phase of framed receives that must come
# back ascending and end as a permutation of xs.
FG_PROT_TEMPLATE = '''
mu h (xs : list %(elem)s := []).
  (<! (x : %(elem)s)> MSG x; h(append(xs, [x])))
  <+>
  (mu t (ys : list %(elem)s := [], prev : %(elem)s := %(prev0)s).
     <? (b : bool)> MSG b {{ guard(b == false, perm(ys, xs)) }};
     if b then (
       <? (y : %(elem)s)> MSG y {{ guard(0 < len(ys), %(le)s) }};
       t(append(ys, [y]), y)
     ) else (END))
'''

FG_PROT_INT = FG_PROT_TEMPLATE % {
    "elem": "int", "prev0": "0", "le": "prev <= y"}
FG_PROT_PAIR = FG_PROT_TEMPLATE % {
    "elem": "val", "prev0": "(0, 0)", "le": "fst(prev) <= fst(y)"}

# A worker of the shared-endpoint mapper pool.  The endpoint is used by
# every worker, so each transaction runs inside the lock.
POOL_WORKER = '''
let: "par_mapper_worker" := (rec: "par_mapper_worker" "fv" "lk" "c" :=
  (acquire "lk") ;;
  (select "c" left) ;;
  branch "c" {
    let: "x" := recv "c" in
    (release "lk") ;;
    let: "y" := "fv" "x" in
    (acquire "lk") ;;
    (select "c" right) ;;
    (send "c" "y") ;;
    (release "lk") ;;
    "par_mapper_worker" "fv" "lk" "c"
  } {
    release "lk"
  }) in
'''

# Pool protocol from the distributor's side: n is the number of live
# workers, X the multiset of jobs currently held by workers.  A worker may
# either ask for news (left) or return a finished job (right); the last
# live worker may only ask when no job is outstanding.
POOL_PROT_TEMPLATE = '''
mu r (n : int := %(workers)d, X : list int := []).
  if n == 0 then (END) else (
    <? (w : bool)> MSG w {{ guard(w, guard(n == 1, len(X) == 0)) }};
    if w then (
      (<! (x : int)> MSG x; r(n, append(X, [x])))
      <+>
      (r(n - 1, X))
    ) else (
      <? (x : int) (h : loc)> MSG h {{ mem(x, X) * llist(h, %(items)s) }};
      r(n, remove1(X, x))
    ))
'''

REDUCER_PROT_TEMPLATE = '''
mu r (n : int := %(workers)d, X : list val := []).
  if n == 0 then (END) else (
    <? (w : bool)> MSG w {{ guard(w, guard(n == 1, len(X) == 0)) }};
    if w then (
      (<! (k : int) (s : int) (h : loc) (ns : list int)> MSG (k, h)
         {{ llist(h, ns) * s == sum(ns) }};
       r(n, append(X, [(k, s)])))
      <+>
      (r(n - 1, X))
    ) else (
      <? (k : int) (s : int) (h : loc)> MSG h
         {{ llist(h, [(k, s)]) * mem((k, s), X) }};
      r(n, remove1(X, (k, s)))
    ))
'''


# ---------------------------------------------------------------------------
# Fixed fork/channel programs (each finishes with the value 42)

def _check_42(result: RunResult, mon: Optional[Monitor]) -> Optional[str]:
    if not (isinstance(result.value, VInt) and result.value.n == 42):
        return "final value %r, wanted 42" % (result.value,)
    if mon is not None and mon.violations:
        return "unexpected violations %r" % (mon.violations,)
    return None


def _fixed(name, summary, tags, source, protocols, max_steps=10 ** 6,
           check=_check_42):
    return CorpusEntry(
        name, summary, tags,
        lambda: Case(name, source, protocols, check, max_steps=max_steps))


ONESHOT = _fixed(
    "oneshot", "forked sender hands 42 to the main thread", ("answer",),
    '''
    let: "cc" := new_chan @"pipe" #() in
    let: "c" := fst "cc" in
    let: "c'" := snd "cc" in
    (Fork { send "c'" #42 }) ;;
    recv "c"
    ''',
    {"pipe": "<?> MSG 42; END"})

ADDTWO = _fixed(
    "addtwo", "service returns its request plus two", ("answer",),
    '''
    let: "cc" := new_chan @"pipe" #() in
    let: "c" := fst "cc" in
    let: "c'" := snd "cc" in
    (Fork { let: "x" := recv "c'" in send "c'" ("x" + #2) }) ;;
    (send "c" #40) ;;
    recv "c"
    ''',
    {"pipe": "<! (x : int)> MSG x; <?> MSG x + 2; END"})

REF_ADDTWO = _fixed(
    "ref_addtwo", "a heap cell is transferred, bumped remotely, and read back",
    ("answer", "ownership"),
    '''
    let: "cc" := new_chan @"pipe" #() in
    let: "c" := fst "cc" in
    let: "c'" := snd "cc" in
    (Fork {
      let: "l" := recv "c'" in
      ("l" <- (! "l") + #2) ;;
      send "c'" #()
    }) ;;
    let: "l" := ref #40 in
    (send "c" "l") ;;
    (recv "c") ;;
    ! "l"
    ''',
    {"pipe": "<! (l : loc) (x : int)> MSG l {{ pointsto(l, x) }}; "
             "<?> MSG () {{ pointsto(l, x + 2) }}; END"})

LOOP_ADDTWO = _fixed(
    "loop_addtwo", "looping add-two service driven twice", ("answer",),
    '''
    let: "cc" := new_chan @"pipe" #() in
    let: "c" := fst "cc" in
    let: "c'" := snd "cc" in
    (Fork {
      (rec: "go" "u" := (send "c'" ((recv "c'") + #2)) ;; ("go" #())) #()
    }) ;;
    (send "c" #18) ;;
    let: "x" := recv "c" in
    (send "c" #20) ;;
    let: "y" := recv "c" in
    "x" + "y"
    ''',
    {"pipe": "mu r. <! (x : int)> MSG x; <?> MSG x + 2; r"})

DELEGATE_RELAY = _fixed(
    "delegate_relay",
    "an endpoint is lent to a helper thread and handed back afterwards",
    ("answer", "delegation"),
    '''
    let: "cc1" := new_chan @"deleg" #() in
    let: "c1" := fst "cc1" in
    let: "c1x" := snd "cc1" in
    (Fork {
      let: "c" := recv "c1x" in
      let: "y" := recv "c1x" in
      (send "c" "y") ;;
      send "c1x" #()
    }) ;;
    let: "cc2" := new_chan @"relay" #() in
    let: "c2" := fst "cc2" in
    let: "c2x" := snd "cc2" in
    (Fork { let: "x" := recv "c2x" in send "c2x" ("x" + #2) }) ;;
    (send "c1" "c2") ;;
    (send "c1" #40) ;;
    (recv "c1") ;;
    recv "c2"
    ''',
    {"deleg": "<! (c : val)> MSG c "
              "{{ chanown(c, <! (y : int)> MSG y; <?> MSG y + 2; END) }}; "
              "<! (y : int)> MSG y; "
              "<?> MSG () {{ chanown(c, <?> MSG y + 2; END) }}; END",
     "relay": "<! (x : int)> MSG x; <?> MSG x + 2; END"})

FUN_TRANSFER = _fixed(
    "fun_transfer", "closures cross the channel in both directions",
    ("answer",),
    '''
    let: "cc" := new_chan @"funch" #() in
    let: "c" := fst "cc" in
    let: "c'" := snd "cc" in
    (Fork {
      let: "f" := recv "c'" in
      send "c'" (λ: "u", ("f" #()) + #2)
    }) ;;
    let: "l" := ref #40 in
    (send "c" (λ: "u", ! "l")) ;;
    (recv "c") #()
    ''',
    {"funch": '<! (f : val)> MSG f {{ trusted("produces the stored number") }}; '
              '<? (g : val)> MSG g {{ trusted("adds two on top") }}; END'})

EARLY_REPLY = _fixed(
    "early_reply", "service answers before reading its request", ("answer", "swap"),
    '''
    let: "cc" := new_chan @"early" #() in
    let: "c" := fst "cc" in
    let: "c'" := snd "cc" in
    (Fork { (send "c'" #20) ;; send "c'" ((recv "c'") + #2) }) ;;
    (send "c" #20) ;;
    let: "x" := recv "c" in
    let: "y" := recv "c" in
    "x" + "y"
    ''',
    {"early": "<! (x : int)> MSG x; <?> MSG 20; <?> MSG x + 2; END"})

LOCK_SHARED = _fixed(
    "lock_shared", "two threads share one endpoint under a lock", ("answer", "sharing"),
    '''
    let: "c" := start @"lockex" (λ: "c'",
      let: "lk" := newlock #() in
      (Fork { (acquire "lk") ;; (send "c'" #21) ;; release "lk" }) ;;
      (acquire "lk") ;; (send "c'" #21) ;; release "lk") in
    (recv "c") + (recv "c")
    ''',
    {"lockex": "mu r (n : int := 2). "
               "if n == 0 then (END) else (<?> MSG 21; r(n - 1))"})

REF_SWAP_LOOP = _fixed(
    "ref_swap_loop",
    "two cells are sent ahead of the replies they are owed", ("answer", "swap",
                                                              "ownership"),
    '''
    let: "c" := start @"refloop" (rec: "go" "c'" :=
      let: "l" := recv "c'" in
      ("l" <- (! "l") + #2) ;;
      (send "c'" #()) ;;
      "go" "c'") in
    let: "l1" := ref #18 in
    let: "l2" := ref #20 in
    (send "c" "l1") ;;
    (send "c" "l2") ;;
    (recv "c") ;;
    (recv "c") ;;
    (! "l1") + (! "l2")
    ''',
    {"refloop": "mu r. <! (l : loc) (x : int)> MSG l {{ pointsto(l, x) }}; "
                "<?> MSG () {{ pointsto(l, x + 2) }}; r"})


# ---------------------------------------------------------------------------
# Sorting services

def _check_sorted_handle(xs):
    want = sorted(xs)

    def check(result, mon):
        if not isinstance(result.value, VLoc):
            return "final value %r is not a list handle" % (result.value,)
        got = _read_ints(result, result.value.i)
        if got != want:
            return "list holds %r, wanted %r" % (got, want)
        if mon is not None and mon.violations:
            return "unexpected violations %r" % (mon.violations,)
        return None

    return check


def _check_sorted_nested(xss):
    def check(result, mon):
        if not isinstance(result.value, VLoc):
            return "final value %r is not a list handle" % (result.value,)
        walked = read_list(result.config.heap, result.value.i)
        if walked is None:
            return "no outer list at %r" % (result.value,)
        handles = walked[0]
        if len(handles) != len(xss):
            return "outer list has %d entries, wanted %d" % (len(handles),
                                                             len(xss))
        for h, xs in zip(handles, xss):
            if not isinstance(h, VLoc):
                return "outer entry %r is not a handle" % (h,)
            got = _read_ints(result, h.i)
            if got != sorted(xs):
                return "inner list holds %r, wanted %r" % (got, sorted(xs))
        if mon is not None and mon.violations:
            return "unexpected violations %r" % (mon.violations,)
        return None

    return check


def _build_sort(xs=(11, 3, 3, 0, 25)):
    xs = list(xs)
    source = SORT_SERVICE + INT_LE + '''
    let: "l" := %s in
    let: "c" := start @"sort" ("sort_service" "cmp") in
    (send "c" "l") ;;
    (recv "c") ;;
    "l"
    ''' % _int_list("l0", xs)
    return Case("sort", source, {"sort": SORT_PROT},
                _check_sorted_handle(xs), inputs=xs)


SORT = CorpusEntry(
    "sort", "in-place merge sort behind a list-handle protocol", ("sort",),
    _build_sort,
    lambda rng: ([rng.randint(0, 99)
                  for _ in range(rng.randint(0, 32))],))


def _build_sort_fn(xs=(9, 1, 7, 7)):
    xs = list(xs)
    source = SORT_SERVICE + INT_LE + '''
    let: "sort_service_fn" := (λ: "c",
      let: "f" := recv "c" in
      "sort_service" "f" "c") in
    let: "l" := %s in
    let: "c" := start @"sortf" "sort_service_fn" in
    (send "c" "cmp") ;;
    (send "c" "l") ;;
    (recv "c") ;;
    "l"
    ''' % _int_list("l0", xs)
    texts = {"sortf": '<! (cmp : val)> MSG cmp {{ trusted("total order on '
                      'numbers") }}; ' + SORT_PROT,
             "sort": SORT_PROT}
    return Case("sort_fn", source, texts, _check_sorted_handle(xs), inputs=xs)


SORT_FN = CorpusEntry(
    "sort_fn", "sort variant that receives its comparison over the channel",
    ("sort",),
    _build_sort_fn,
    lambda rng: ([rng.randint(0, 99)
                  for _ in range(rng.randint(0, 32))],))


def _build_sort_loop(xss=((4, 2), (8, 0, 5), ())):
    xss = [list(xs) for xs in xss]
    source = SORT_SERVICE + INT_LE + '''
    let: "sort_service_loop" := (rec: "sort_service_loop" "cmp" "c" :=
      branch "c" {
        ("sort_service" "cmp" "c") ;;
        ("sort_service_loop" "cmp" "c")
      } { #() }) in
    let: "l" := %s in
    let: "c" := start @"sortl" ("sort_service_loop" "cmp") in
    (liter (λ: "l2", (select "c" left) ;; (send "c" "l2") ;; recv "c") "l") ;;
    (select "c" right) ;;
    "l"
    ''' % _nested_list("l0", xss)
    texts = {"sortl": "mu r. (%s) <+> (END)" % SORT_PROT.replace("; END", "; r"),
             "sort": SORT_PROT}
    return Case("sort_loop", source, texts, _check_sorted_nested(xss),
                inputs=xss)


SORT_LOOP = CorpusEntry(
    "sort_loop", "recurring sort service fed several jobs in sequence",
    ("sort",),
    _build_sort_loop,
    lambda rng: ([[rng.randint(0, 99) for _ in range(rng.randint(0, 8))]
                  for _ in range(rng.randint(0, 4))],))


def _build_sort_deleg(xss=((6, 6, 1), (3,))):
    xss = [list(xs) for xs in xss]
    source = SORT_SERVICE + INT_LE + '''
    let: "sort_service_deleg" := (rec: "sort_service_deleg" "cmp" "c" :=
      branch "c" {
        let: "c'" := start @"sort" ("sort_service" "cmp") in
        (send "c" "c'") ;;
        ("sort_service_deleg" "cmp" "c")
      } { #() }) in
    let: "l" := %s in
    let: "c" := start @"sortd" ("sort_service_deleg" "cmp") in
    let: "k" := lnil #() in
    (liter (λ: "l2",
       (select "c" left) ;;
       (let: "c'" := recv "c" in
        (send "c'" "l2") ;;
        lcons "c'" "k")) "l") ;;
    (select "c" right) ;;
    (liter (λ: "c'", recv "c'") "k") ;;
    "l"
    ''' % _nested_list("l0", xss)
    texts = {"sortd": "mu r. (<? (c : val)> MSG c {{ chanown(c, %s) }}; r) "
                      "<+> (END)" % SORT_PROT,
             "sort": SORT_PROT}
    return Case("sort_deleg", source, texts, _check_sorted_nested(xss),
                inputs=xss)


SORT_DELEG = CorpusEntry(
    "sort_deleg", "jobs run in parallel on endpoints delegated by the service",
    ("sort_extra", "delegation"),
    _build_sort_deleg,
    lambda rng: ([[rng.randint(0, 99) for _ in range(rng.randint(0, 8))]
                  for _ in range(rng.randint(0, 4))],))


def _build_sort_stream(xs=(5, 2, 9, 2)):
    xs = list(xs)
    source = (SORT_SERVICE_FG.replace("LBL", "sortfg") + SEND_ALL + RECV_ALL
              + INT_LE + '''
    let: "l" := %s in
    let: "c" := start @"sortfg" ("sort_service_fg" "cmp") in
    (send_all "c" "l") ;;
    (select "c" right) ;;
    (recv_all "c" "l") ;;
    "l"
    ''' % _int_list("l0", xs))
    return Case("sort_stream", source, {"sortfg": FG_PROT_INT},
                _check_sorted_handle(xs), max_steps=3 * 10 ** 6, inputs=xs)


SORT_STREAM = CorpusEntry(
    "sort_stream", "merge sort that streams elements one at a time",
    ("sort",),
    _build_sort_stream,
    lambda rng: ([rng.randint(0, 99)
                  for _ in range(rng.randint(0, 32))],))


# ---------------------------------------------------------------------------
# Mappers

def _build_mapper(xs=(7, 0, 13, 2)):
    xs = list(xs)
    source = SEND_ALL + RECV_N + '''
    let: "mapper_service" := (rec: "mapper_service" "fv" "c" :=
      branch "c" {
        let: "x" := recv "c" in
        let: "y" := "fv" "x" in
        (send "c" "y") ;;
        "mapper_service" "fv" "c"
      } { #() }) in
    let: "fv" := (λ: "x", "x" * #2) in
    let: "l" := %s in
    let: "c" := start @"map" ("mapper_service" "fv") in
    let: "n" := llength "l" in
    (send_all "c" "l") ;;
    (recvN "c" "l" "n") ;;
    (select "c" right) ;;
    "l"
    ''' % _int_list("l0", xs)
    want = [2 * x for x in xs]

    def check(result, mon):
        if not isinstance(result.value, VLoc):
            return "final value %r is not a list handle" % (result.value,)
        got = _read_ints(result, result.value.i)
        if got != want:
            return "list holds %r, wanted %r" % (got, want)
        if mon is not None and mon.violations:
            return "unexpected violations %r" % (mon.violations,)
        if mon is not None and len(xs) >= 2 and not mon.swap_log:
            return "expected at least one hoisted send, saw none"
        return None

    texts = {"map": "mu r. (<! (x : int)> MSG x; <?> MSG x * 2; r) <+> (END)"}
    return Case("mapper", source, texts, check, inputs=xs)


MAPPER = CorpusEntry(
    "mapper", "one-element-at-a-time mapper driven with all sends up front",
    ("mapper",),
    _build_mapper,
    lambda rng: ([rng.randint(0, 99)
                  for _ in range(rng.randint(2, 16))],))


def _build_reverse(xs=(3, 1, 4, 1, 5)):
    xs = list(xs)
    source = '''
    let: "list_rev_service" := (λ: "c",
      let: "l" := recv "c" in
      (lreverse "l") ;;
      send "c" #()) in
    let: "l" := %s in
    let: "c" := start @"rev" "list_rev_service" in
    (send "c" "l") ;;
    (recv "c") ;;
    "l"
    ''' % _int_list("l0", xs)
    want = list(reversed(xs))

    def check(result, mon):
        if not isinstance(result.value, VLoc):
            return "final value %r is not a list handle" % (result.value,)
        got = _read_ints(result, result.value.i)
        if got != want:
            return "list holds %r, wanted %r" % (got, want)
        if mon is not None and mon.violations:
            return "unexpected violations %r" % (mon.violations,)
        return None

    texts = {"rev": "<! (l : loc) (vs : list val)> MSG l "
                    "{{ llistV(l, vs) }}; "
                    "<?> MSG () {{ llistV(l, reverse(vs)) }}; END"}
    return Case("reverse", source, texts, check, inputs=xs)


REVERSE = CorpusEntry(
    "reverse", "structure-only list reversal service", ("misc",),
    _build_reverse,
    lambda rng: ([rng.randint(0, 99)
                  for _ in range(rng.randint(0, 24))],))


def _pool_client(jobs_expr: str, workers: int, fv_def: str) -> str:
    forks = ('(Fork { par_mapper_worker "fv" "lk" "c2" }) ;;\n' * workers)
    return POOL_WORKER + '''
    let: "jobs" := %s in
    let: "out" := lnil #() in
    %s
    let: "cc" := new_chan @"pool" #() in
    let: "c" := fst "cc" in
    let: "c2" := snd "cc" in
    let: "lk" := newlock #() in
    %s
    (rec: "serve" "n" :=
       if: "n" = #0 then #() else
       branch "c" {
         if: lisnil "jobs"
         then ((select "c" right) ;; "serve" ("n" - #1))
         else ((select "c" left) ;; (send "c" (lpop "jobs")) ;; "serve" "n")
       } {
         let: "h" := recv "c" in
         (liter (λ: "v", lsnoc "out" "v") "h") ;;
         "serve" "n"
       }) #%d ;;
    "out"
    ''' % (jobs_expr, fv_def, forks, workers)


def _build_mapper_pool(xs=(1, 2, 3, 4, 5, 6, 7, 8), workers=3):
    xs = list(xs)
    fv = ('let: "fv" := (λ: "x", (let: "h" := lnil #() in '
          '(lsnoc "h" "x") ;; (lsnoc "h" ("x" + #1)) ;; "h")) in')
    source = _pool_client(_int_list("l0", xs), workers, fv)
    want = _multiset(y for x in xs for y in (x, x + 1))

    def check(result, mon):
        if not isinstance(result.value, VLoc):
            return "final value %r is not a list handle" % (result.value,)
        got = _read_ints(result, result.value.i)
        if got is None or _multiset(got) != want:
            return "results %r do not cover the jobs (wanted %r)" % (got, want)
        if mon is not None and mon.violations:
            return "unexpected violations %r" % (mon.violations,)
        return None

    texts = {"pool": POOL_PROT_TEMPLATE % {"workers": workers,
                                           "items": "[x, x + 1]"}}
    return Case("mapper_pool", source, texts, check,
                max_steps=3 * 10 ** 6, inputs=(xs, workers))


MAPPER_POOL = CorpusEntry(
    "mapper_pool", "load-balancing workers share one endpoint under a lock",
    ("pool", "sharing"),
    _build_mapper_pool,
    lambda rng: ([rng.randint(0, 99) for _ in range(rng.randint(0, 12))],
                 rng.randint(1, 4)))


# ---------------------------------------------------------------------------
# Map-reduce pipeline

LSUM = '''
let: "lsum" := (rec: "lsum" "l" :=
  match: ! "l" with
    InjL "_" => #0
  | InjR "p" => (fst "p") + ("lsum" (snd "p"))
  end) in
'''

MR_CLIENT = '''
let: "doc" := %(doc)s in
let: "out" := lnil #() in
%(fmap)s
let: "fred" := (λ: "p",
  let: "s" := lsum (snd "p") in
  let: "h" := lnil #() in
  (lsnoc "h" (fst "p", "s")) ;; "h") in
let: "cmpk" := (λ: "a" "b", (fst "a") <= (fst "b")) in
let: "ccm" := new_chan @"mrmap" #() in
let: "cm" := fst "ccm" in
let: "cm2" := snd "ccm" in
let: "lkm" := newlock #() in
(Fork { par_mapper_worker "fmap" "lkm" "cm2" }) ;;
(Fork { par_mapper_worker "fmap" "lkm" "cm2" }) ;;
let: "cs" := start @"mrsort" ("sort_service_fg" "cmpk") in
(rec: "serve_map" "n" :=
   if: "n" = #0 then #() else
   branch "cm" {
     if: lisnil "doc"
     then ((select "cm" right) ;; "serve_map" ("n" - #1))
     else ((select "cm" left) ;; (send "cm" (lpop "doc")) ;; "serve_map" "n")
   } {
     let: "h" := recv "cm" in
     (liter (λ: "kv", (select "cs" left) ;; send "cs" "kv") "h") ;;
     "serve_map" "n"
   }) #2 ;;
(select "cs" right) ;;
let: "ccr" := new_chan @"mrred" #() in
let: "cr" := fst "ccr" in
let: "cr2" := snd "ccr" in
let: "lkr" := newlock #() in
(Fork { par_mapper_worker "fred" "lkr" "cr2" }) ;;
(Fork { par_mapper_worker "fred" "lkr" "cr2" }) ;;
let: "la" := ref (InjL #()) in
let: "pull" := (λ: "u",
  branch "cs" { "la" <- (InjR (recv "cs")) } { "la" <- (InjL #()) }) in
("pull" #()) ;;
(rec: "serve_red" "m" :=
   if: "m" = #0 then #() else
   branch "cr" {
     match: ! "la" with
       InjL "_" => (select "cr" right) ;; "serve_red" ("m" - #1)
     | InjR "kv" =>
       let: "k" := fst "kv" in
       let: "ns" := lnil #() in
       (lsnoc "ns" (snd "kv")) ;;
       ("pull" #()) ;;
       ((rec: "gather" "u" :=
          match: ! "la" with
            InjL "_" => #()
          | InjR "kv2" =>
            if: (fst "kv2") = "k"
            then ((lsnoc "ns" (snd "kv2")) ;; ("pull" #()) ;; "gather" #())
            else #()
          end) #()) ;;
       (select "cr" left) ;; (send "cr" ("k", "ns")) ;; "serve_red" "m"
     end
   } {
     let: "h" := recv "cr" in
     (liter (λ: "kv", lsnoc "out" "kv") "h") ;;
     "serve_red" "m"
   }) #2 ;;
"out"
'''


def _ref_map_reduce(f, g, xs):
    pairs = [kv for x in xs for kv in f(x)]
    groups: dict = {}
    order: list = []
    for k, v in pairs:
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(v)
    return [out for k in order for out in g((k, groups[k]))]


def _build_map_reduce(name, doc, fmap_def, fmap_items, f_py):
    doc = list(doc)
    source = (POOL_WORKER + SORT_SERVICE_FG.replace("LBL", "mrsort") + LSUM
              + MR_CLIENT % {"doc": _int_list("l0", doc), "fmap": fmap_def})
    g_py = lambda kns: [(kns[0], sum(kns[1]))]
    want = _multiset(_ref_map_reduce(f_py, g_py, doc))

    def check(result, mon):
        if not isinstance(result.value, VLoc):
            return "final value %r is not a list handle" % (result.value,)
        got = _read_values(result, result.value.i)
        if got is None or _multiset(got) != want:
            return "aggregate %r does not match the plain pipeline %r" % (
                got, want)
        if mon is not None and mon.violations:
            return "unexpected violations %r" % (mon.violations,)
        return None

    texts = {
        "mrmap": POOL_PROT_TEMPLATE % {"workers": 2, "items": fmap_items},
        "mrsort": FG_PROT_PAIR,
        "mrred": REDUCER_PROT_TEMPLATE % {"workers": 2},
    }
    return Case(name, source, texts, check, max_steps=8 * 10 ** 6, inputs=doc)


_WORDS = [1, 2, 3, 4, 5, 6, 7, 8]
_DEFAULT_DOC = [_WORDS[(3 * i + i * i) % len(_WORDS)] for i in range(50)]

WORDCOUNT_FMAP = ('let: "fmap" := (λ: "x", (let: "h" := lnil #() in '
                  '(lsnoc "h" ("x", #1)) ;; "h")) in')


def _build_wordcount(doc=tuple(_DEFAULT_DOC)):
    return _build_map_reduce("wordcount", doc, WORDCOUNT_FMAP, "[(x, 1)]",
                             lambda x: [(x, 1)])


WORDCOUNT = CorpusEntry(
    "wordcount", "occurrence counting as a two-stage worker pipeline",
    ("mapreduce",),
    _build_wordcount,
    lambda rng: ([rng.choice(_WORDS) for _ in range(rng.randint(8, 24))],))

PAIRS_FMAP = ('let: "fmap" := (λ: "x", (let: "h" := lnil #() in '
              '(lsnoc "h" ("x", "x")) ;; (lsnoc "h" ("x" + #1, #1)) ;; '
              '"h")) in')


def _build_mapreduce_pairs(doc=(3, 1, 2, 3, 1, 4, 2, 2)):
    return _build_map_reduce("mapreduce_pairs", doc, PAIRS_FMAP,
                             "[(x, x), (x + 1, 1)]",
                             lambda x: [(x, x), (x + 1, 1)])


MAPREDUCE_PAIRS = CorpusEntry(
    "mapreduce_pairs", "pipeline instance whose mapper emits two keyed pairs",
    ("mapreduce",),
    _build_mapreduce_pairs,
    lambda rng: ([rng.randint(0, 9) for _ in range(rng.randint(4, 16))],))


# ---------------------------------------------------------------------------

_ENTRIES: Tuple[CorpusEntry, ...] = (
    ONESHOT, ADDTWO, REF_ADDTWO, LOOP_ADDTWO, DELEGATE_RELAY, FUN_TRANSFER,
    EARLY_REPLY, LOCK_SHARED, REF_SWAP_LOOP,
    SORT, SORT_FN, SORT_LOOP, SORT_DELEG, SORT_STREAM,
    MAPPER, REVERSE, MAPPER_POOL,
    WORDCOUNT, MAPREDUCE_PAIRS,
)


def entries() -> Tuple[CorpusEntry, ...]:
    return _ENTRIES


def by_name(name: str) -> CorpusEntry:
    for e in _ENTRIES:
        if e.name == name:
            return e
    raise KeyError("no corpus entry named %r" % name)


def tagged(tag: str) -> Tuple[CorpusEntry, ...]:
    return tuple(e for e in _ENTRIES if tag in e.tags)
