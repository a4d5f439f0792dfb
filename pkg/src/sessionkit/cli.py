"""Command-line front end: run programs under the monitor, check protocol
refinement, apply protocol operations, and drive the bundled example suite.

Exit codes
  run        0 finished, 2 stuck or step budget exhausted, 3 monitor
             violation, 4 parse or I/O error
  check      0 Yes, 1 No, 2 Unknown, 4 parse error
  normalize  0 printed, 4 parse error
  corpus     0 all good, 1 result predicate failed, 2 stuck/timeout,
             3 violation, 4 unknown entry
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Dict, Optional

from . import corpus as corpus_mod
from .lang.machine import EVENT_NAMES, run
from .lang.parser import ParseError
from .monitor import Monitor
from .prelude import prepare
from .protocol.ast import Mu, Protocol
from .protocol.ops import ProtocolError, append, dual, fold_protocol, \
    normalize_head, unfold
from .protocol.parser import ProtoParseError, parse_protocol
from .protocol.printer import print_protocol
from .subtyping import check_subprot

_PARSE_ERRORS = (ParseError, ProtoParseError, ProtocolError, OSError)


def load_assignments(path: str) -> Dict[str, Protocol]:
    """Parse a protocol-assignment file.

    The format is INI-like: a `[label]` line opens a section and everything
    until the next section is that label's protocol text.  Blank lines and
    lines starting with `#` outside protocol text are ignored.
    """
    out: Dict[str, Protocol] = {}
    label: Optional[str] = None
    chunk: list = []

    def flush():
        if label is not None:
            text = "\n".join(chunk).strip()
            if not text:
                raise ProtoParseError("label %r has no protocol text" % label)
            out[label] = parse_protocol(text)

    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                flush()
                label = stripped[1:-1].strip()
                chunk = []
            elif label is None:
                if stripped and not stripped.startswith("#"):
                    raise ProtoParseError(
                        "text before the first [label] section: %r" % stripped)
            else:
                chunk.append(line)
    flush()
    return out


def _json_value(v) -> object:
    return repr(v)


def _write_trace(path: str, result, seed: int) -> None:
    events = []
    for kind, tid, payload in result.events:
        args = []
        for p in payload:
            if isinstance(p, (bool, int, str)):
                args.append(p)
            else:
                args.append(_json_value(p))
        events.append({"kind": EVENT_NAMES.get(kind, str(kind)),
                       "tid": tid, "args": args})
    doc = {
        "seed": seed,
        "status": result.status,
        "steps": result.step_count,
        "value": None if result.value is None else repr(result.value),
        "trace_hash": "0x%016x" % result.trace_hash,
        "events": events,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _violation_report(violation) -> dict:
    return {
        "kind": violation.kind,
        "detail": violation.detail,
        "channel": violation.chan,
        "side": violation.side,
        "tid": violation.tid,
        "step": violation.step,
    }


def cmd_run(args) -> int:
    try:
        with open(args.program) as fh:
            src = fh.read()
        expr = prepare(src)
        assignments = (load_assignments(args.protocols)
                       if args.protocols else {})
    except _PARSE_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    mon = None
    if not args.no_monitor:
        mon = Monitor(assignments, ownership=args.ownership,
                      auto_swap=not args.no_auto_swap)
    result = run(expr, seed=args.seed, scheduler=args.sched,
                 max_steps=args.max_steps, observer=mon,
                 record_events=args.trace is not None)
    if args.trace:
        _write_trace(args.trace, result, args.seed)
    if result.status == "violation":
        print(json.dumps(_violation_report(result.violation), indent=1))
        return 3
    if result.status != "done":
        print("status: %s after %d steps" % (result.status,
                                             result.step_count))
        return 2
    print("result: %r" % result.value)
    print("steps: %d" % result.step_count)
    print("trace hash: 0x%016x" % result.trace_hash)
    if mon is not None and mon.swap_log:
        print("hoisted sends: %d" % len(mon.swap_log))
    return 0


def cmd_check(args) -> int:
    try:
        with open(args.file) as fh:
            text = fh.read()
        lines = text.splitlines()
        split_at = None
        for i, line in enumerate(lines):
            if line.strip() in ("<:", "⊑"):
                split_at = i
                break
        if split_at is None:
            raise ProtoParseError(
                "expected a separator line '<:' between the two protocols")
        p = parse_protocol("\n".join(lines[:split_at]))
        q = parse_protocol("\n".join(lines[split_at + 1:]))
    except _PARSE_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    verdict = check_subprot(p, q, fuel=args.fuel)
    print(verdict.kind.capitalize())
    if verdict.reason:
        print("reason: %s" % verdict.reason)
    if verdict.detail:
        print("detail: %s" % verdict.detail)
    if args.derivation:
        for line in verdict.derivation:
            print("  " + line)
    return {"yes": 0, "no": 1, "unknown": 2}[verdict.kind]


def _read_protocol_arg(text: str) -> Protocol:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    return parse_protocol(text)


def cmd_normalize(args) -> int:
    try:
        protos = [_read_protocol_arg(t) for t in args.protocol]
        if args.dual:
            if len(protos) != 1:
                raise ProtoParseError("--dual takes one protocol")
            out = dual(protos[0])
        elif args.append:
            if len(protos) != 2:
                raise ProtoParseError("--append takes two protocols")
            out = append(protos[0], protos[1])
        elif args.unfold is not None:
            if len(protos) != 1:
                raise ProtoParseError("--unfold takes one protocol")
            out = fold_protocol(protos[0])
            for _ in range(args.unfold):
                if not isinstance(out, Mu):
                    break
                out = fold_protocol(unfold(out))
        else:
            if len(protos) != 1:
                raise ProtoParseError("expected one protocol")
            out, _ = normalize_head(protos[0])
    except _PARSE_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    print(print_protocol(out))
    return 0


def cmd_corpus(args) -> int:
    if args.action == "list":
        for e in corpus_mod.entries():
            case = e.case()
            print("%-16s %s  [labels: %s]"
                  % (e.name, e.summary, ", ".join(sorted(case.protocols))))
        return 0
    if args.all:
        names = [e.name for e in corpus_mod.entries()]
    else:
        names = [args.name]
    worst = 0
    for name in names:
        try:
            entry = corpus_mod.by_name(name)
        except KeyError as exc:
            print("error: %s" % exc, file=sys.stderr)
            return 4
        rng = random.Random(args.sample) if args.sample is not None else None
        case = entry.case(rng)
        for seed in range(args.seed, args.seed + args.seeds):
            result, mon, err = corpus_mod.run_case(
                case, seed=seed, scheduler=args.sched,
                ownership=args.ownership, auto_swap=not args.no_auto_swap)
            ok = "ok" if err is None else "FAIL"
            print("%-16s seed=%-4d %-4s steps=%-8d %s"
                  % (name, seed, ok, result.step_count, err or ""))
            if err is not None:
                if result.status == "violation":
                    worst = max(worst, 3)
                elif result.status != "done":
                    worst = max(worst, 2)
                else:
                    worst = max(worst, 1)
    return worst


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sessionkit",
        description="Deterministic runtime and protocol toolkit for "
                    "channel-based message passing.")
    sub = ap.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("run", help="run a program under the monitor")
    rp.add_argument("program", help="program source path")
    rp.add_argument("--protocols", help="protocol-assignment file")
    rp.add_argument("--seed", type=int, default=1)
    rp.add_argument("--max-steps", type=int, default=10 ** 6,
                    dest="max_steps")
    rp.add_argument("--sched", choices=("random", "round-robin"),
                    default="random")
    rp.add_argument("--ownership", choices=("relaxed", "strict"),
                    default="relaxed")
    rp.add_argument("--no-auto-swap", action="store_true")
    rp.add_argument("--no-monitor", action="store_true",
                    help="run without the monitor attached")
    rp.add_argument("--trace", help="write a JSON event trace here")
    rp.set_defaults(fn=cmd_run)

    cp = sub.add_parser("check", help="decide protocol refinement p <: q")
    cp.add_argument("file", help="file with p, a '<:' line, then q")
    cp.add_argument("--fuel", type=int, default=128)
    cp.add_argument("--derivation", action="store_true",
                    help="print the step trail")
    cp.set_defaults(fn=cmd_check)

    np = sub.add_parser("normalize",
                        help="print a protocol after an operation")
    np.add_argument("protocol", nargs="+",
                    help="protocol text, or @path to read a file")
    np.add_argument("--dual", action="store_true")
    np.add_argument("--append", action="store_true")
    np.add_argument("--unfold", type=int, default=None, metavar="N")
    np.set_defaults(fn=cmd_normalize)

    kp = sub.add_parser("corpus", help="list or run the example suite")
    ksub = kp.add_subparsers(dest="action", required=True)
    klist = ksub.add_parser("list", help="list entries")
    klist.set_defaults(fn=cmd_corpus, all=False)
    krun = ksub.add_parser("run", help="run one entry (or all)")
    krun.add_argument("name", nargs="?", default=None)
    krun.add_argument("--all", action="store_true")
    krun.add_argument("--seed", type=int, default=1)
    krun.add_argument("--seeds", type=int, default=1,
                      help="number of consecutive seeds to run")
    krun.add_argument("--sample", type=int, default=None,
                      help="draw randomized inputs from this sample seed")
    krun.add_argument("--sched", choices=("random", "round-robin"),
                      default="random")
    krun.add_argument("--ownership", choices=("relaxed", "strict"),
                      default="relaxed")
    krun.add_argument("--no-auto-swap", action="store_true")
    krun.set_defaults(fn=cmd_corpus)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "command", None) == "corpus" \
            and args.action == "run" and not args.all and args.name is None:
        ap.error("corpus run needs an entry name or --all")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
