"""Protocol syntax tree.

A protocol describes one endpoint's view of a conversation:

  End                        nothing further may be exchanged
  Msg('!' or '?', binders, value, payload, tail)
                             send/receive a value matching the value term,
                             for some instantiation of the binders; the
                             payload predicate transfers with the message
  Mu(name, params, body)     recursion; params carry loop state with their
                             initial values, so recursive references are
                             written RecVar(name, args)
  Cond(cond, then, els)      protocol chosen by a term of boolean sort

Choice (offering left/right) is not a separate node: it is encoded as a
boolean message followed by Cond, which is what the runtime's select/branch
notation produces.
"""

from __future__ import annotations

from typing import Tuple

from .terms import LTerm, Pred, Sort, TRIVIAL


class Protocol:
    __slots__ = ()

    def __repr__(self):
        from .printer import print_protocol
        return print_protocol(self)


class End(Protocol):
    __slots__ = ()


class Msg(Protocol):
    __slots__ = ("action", "binders", "value", "payload", "tail")

    def __init__(self, action: str, binders, value: LTerm,
                 payload: Pred = TRIVIAL, tail: Protocol = None):
        if action not in ("!", "?"):
            raise ValueError("action must be '!' or '?'")
        self.action = action
        self.binders: Tuple[Tuple[str, Sort], ...] = tuple(binders)
        self.value = value
        self.payload = payload
        self.tail = tail if tail is not None else End()


class Mu(Protocol):
    __slots__ = ("name", "params", "body")

    def __init__(self, name: str, params, body: Protocol):
        # params: tuple of (name, sort, init_term)
        self.name = name
        self.params = tuple(params)
        self.body = body


class RecVar(Protocol):
    __slots__ = ("name", "args")

    def __init__(self, name: str, args=()):
        self.name = name
        self.args: Tuple[LTerm, ...] = tuple(args)


class Cond(Protocol):
    __slots__ = ("cond", "then", "els")

    def __init__(self, cond: LTerm, then: Protocol, els: Protocol):
        self.cond = cond
        self.then = then
        self.els = els


END = End()


def send(binders, value, payload=TRIVIAL, tail=None) -> Msg:
    return Msg("!", binders, value, payload, tail)


def recv(binders, value, payload=TRIVIAL, tail=None) -> Msg:
    return Msg("?", binders, value, payload, tail)
