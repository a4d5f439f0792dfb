"""Runtime library: linked lists, spin locks, and lock-protected channels.

Everything here is written in the object language itself and spliced around
user programs as a chain of `let`s.  A channel is a pair of buffers plus one
lock; an endpoint is (own_buffer, peer_buffer, lock) and its peer is the
mirrored triple.  send appends to the first buffer, receive pops from the
second, and send pads itself with one skip per element in the peer buffer so
its step cost does not leak the buffer length.

`__emit` notifications fire inside the critical section right after the
buffer operation, so the event order seen by a monitor is the commit order
of sends and receives.
"""

from __future__ import annotations

from functools import lru_cache
from typing import List, Tuple

from .lang.ast import (
    EApp, EBranch, EBinOp, ECAS, EFork, EFst, EHook, EIf, EInj, ELoad,
    EMatch, EPair, ERec, ERef, ESelect, ESnd, EStore, EVal, EVar, Expr,
)
from .lang.parser import parse_program

PRELUDE_DEFS: List[Tuple[str, str]] = [
    ("skipN", '''
        rec: "skipN" "n" := if: "n" <= #0 then #() else "skipN" ("n" - #1)
    '''),
    ("lnil", '''
        λ: "u", ref (InjL #())
    '''),
    ("lcons", '''
        λ: "v" "l", "l" <- InjR ("v", ref (! "l"))
    '''),
    ("lsnoc", '''
        rec: "lsnoc" "l" "v" :=
          match: ! "l" with
            InjL "_" => "l" <- InjR ("v", ref (InjL #()))
          | InjR "p" => "lsnoc" (snd "p") "v"
          end
    '''),
    ("lisnil", '''
        λ: "l", match: ! "l" with InjL "_" => #true | InjR "_" => #false end
    '''),
    ("lpop", '''
        λ: "l",
          match: ! "l" with
            InjL "_" => assert: #false
          | InjR "p" => (let: "v" := fst "p" in ("l" <- ! (snd "p")) ;; "v")
          end
    '''),
    ("llength", '''
        rec: "llength" "l" :=
          match: ! "l" with
            InjL "_" => #0
          | InjR "p" => #1 + "llength" (snd "p")
          end
    '''),
    ("liter", '''
        rec: "liter" "f" "l" :=
          match: ! "l" with
            InjL "_" => #()
          | InjR "p" => ("f" (fst "p")) ;; ("liter" "f" (snd "p"))
          end
    '''),
    ("lreverse", '''
        λ: "l",
          let: "go" :=
            rec: "go" "cur" "acc" :=
              match: ! "cur" with
                InjL "_" => "acc"
              | InjR "p" => "go" (snd "p") (InjR (fst "p", ref "acc"))
              end
          in "l" <- "go" "l" (InjL #())
    '''),
    ("lhalf", '''
        rec: "lhalf" "n" := if: "n" <= #1 then #0 else #1 + "lhalf" ("n" - #2)
    '''),
    ("lsplit", '''
        λ: "l",
          let: "go" :=
            rec: "go" "cur" "k" :=
              if: "k" <= #0
              then (let: "l2" := ref (! "cur") in ("cur" <- InjL #()) ;; "l2")
              else match: ! "cur" with
                     InjL "_" => assert: #false
                   | InjR "p" => "go" (snd "p") ("k" - #1)
                   end
          in "go" "l" ("lhalf" ("llength" "l"))
    '''),
    ("lmerge", '''
        rec: "lmerge" "cmp" "l1" "l2" :=
          match: ! "l1" with
            InjL "_" => "l1" <- ! "l2"
          | InjR "p1" =>
            match: ! "l2" with
              InjL "_" => #()
            | InjR "p2" =>
              if: "cmp" (fst "p1") (fst "p2")
              then "lmerge" "cmp" (snd "p1") "l2"
              else
                let: "rest1" := ref (! "l1") in
                ("l1" <- InjR (fst "p2", "rest1")) ;;
                "lmerge" "cmp" "rest1" (snd "p2")
            end
          end
    '''),
    ("newlock", '''
        λ: "u", ref #false
    '''),
    ("try_acquire", '''
        λ: "lk", CAS "lk" #false #true
    '''),
    ("acquire", '''
        rec: "acquire" "lk" := if: "try_acquire" "lk" then #() else "acquire" "lk"
    '''),
    ("release", '''
        λ: "lk", "lk" <- #false
    '''),
    ("new_chan", '''
        λ: "u",
          let: "l" := "lnil" #() in
          let: "r" := "lnil" #() in
          let: "lk" := "newlock" #() in
          let: "cc" := (("l", "r", "lk"), ("r", "l", "lk")) in
          (__emit "new_chan" "cc") ;; "cc"
    '''),
    ("send", '''
        λ: "s" "v",
          let: "l" := fst "s" in
          let: "r" := fst (snd "s") in
          let: "lk" := snd (snd "s") in
          ("acquire" "lk") ;;
          ("lsnoc" "l" "v") ;;
          (__emit "send" "s" "v") ;;
          ("skipN" ("llength" "r")) ;;
          ("release" "lk")
    '''),
    ("try_recv", '''
        λ: "s",
          let: "r" := fst (snd "s") in
          let: "lk" := snd (snd "s") in
          ("acquire" "lk") ;;
          (let: "res" :=
             (if: "lisnil" "r"
              then NONE
              else (let: "v" := "lpop" "r" in (__emit "recv" "s" "v") ;; SOME "v"))
           in ("release" "lk") ;; "res")
    '''),
    ("recv", '''
        rec: "recv" "s" :=
          match: "try_recv" "s" with
            NONE => "recv" "s"
          | SOME "v" => "v"
          end
    '''),
    ("start", '''
        λ: "f",
          let: "cc" := "new_chan" #() in
          (Fork { "f" (snd "cc") }) ;;
          (fst "cc")
    '''),
]

PRELUDE_NAMES = [name for name, _ in PRELUDE_DEFS]


@lru_cache(maxsize=1)
def prelude() -> Tuple[Tuple[str, Expr], ...]:
    """The library definitions as parsed expressions, in dependency order."""
    return tuple((name, parse_program(src)) for name, src in PRELUDE_DEFS)


def desugar_select_branch(e: Expr) -> Expr:
    """Rewrite choice notation into plain messages.

    select c choice  becomes  send c choice   (left = #true, right = #false)
    branch c {l} {r} becomes  if: recv c then l else r
    """
    t = e.__class__
    if t is ESelect:
        return EApp(EApp(EVar("send"), desugar_select_branch(e.chan)),
                    desugar_select_branch(e.choice))
    if t is EBranch:
        return EIf(EApp(EVar("recv"), desugar_select_branch(e.chan)),
                   desugar_select_branch(e.left),
                   desugar_select_branch(e.right))
    if t in (EVal, EVar):
        return e
    if t is EApp:
        return EApp(desugar_select_branch(e.fn), desugar_select_branch(e.arg))
    if t is EBinOp:
        return EBinOp(e.op, desugar_select_branch(e.l), desugar_select_branch(e.r))
    if t is ERec:
        return ERec(e.f, e.x, desugar_select_branch(e.body))
    if t is EPair:
        return EPair(desugar_select_branch(e.a), desugar_select_branch(e.b))
    if t is EFst:
        return EFst(desugar_select_branch(e.e))
    if t is ESnd:
        return ESnd(desugar_select_branch(e.e))
    if t is EIf:
        return EIf(desugar_select_branch(e.cond), desugar_select_branch(e.then),
                   desugar_select_branch(e.els))
    if t is EInj:
        return EInj(e.which, desugar_select_branch(e.e))
    if t is EMatch:
        return EMatch(desugar_select_branch(e.scrut), e.xl,
                      desugar_select_branch(e.el), e.xr,
                      desugar_select_branch(e.er))
    if t is ERef:
        return ERef(desugar_select_branch(e.e))
    if t is ELoad:
        return ELoad(desugar_select_branch(e.e))
    if t is EStore:
        return EStore(desugar_select_branch(e.tgt), desugar_select_branch(e.val))
    if t is ECAS:
        return ECAS(desugar_select_branch(e.loc), desugar_select_branch(e.old),
                    desugar_select_branch(e.new))
    if t is EFork:
        return EFork(desugar_select_branch(e.e))
    if t is EHook:
        return EHook(e.kind, e.label, [desugar_select_branch(a) for a in e.args])
    raise TypeError("desugar: unknown expression %r" % e)


def wrap_prelude(e: Expr) -> Expr:
    """let-bind the whole library around e (innermost binding last)."""
    for name, defn in reversed(prelude()):
        e = EApp(ERec("_", name, e), defn)
    return e


def prepare(src: str) -> Expr:
    """Parse a program and make it runnable: desugar choices, add the library."""
    return wrap_prelude(desugar_select_branch(parse_program(src)))
