"""Protocol syntax, printing, and the equational algebra."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import o_append_actions, o_dual_actions, o_proto_actions
from proto_gen import gen_finite_protocol, gen_protocol
from sessionkit.lang.ast import VInt
from sessionkit.protocol.ast import Cond, END, End, Msg, Mu, RecVar
from sessionkit.protocol.ops import (
    OpenAppend, ProtocolError, alpha_eq, append, canon_key, dual,
    fold_protocol, is_choice, normalize_head, unfold,
)
from sessionkit.protocol.parser import ProtoParseError, parse_protocol
from sessionkit.protocol.printer import print_protocol
from sessionkit.protocol.terms import Pred, TLit


# ---------------------------------------------------------------------------
# Parser / printer

def test_parse_message_shape():
    p = parse_protocol("<! (x : int) (b : bool)> MSG x + 1 "
                       "{{ guard(b, 0 <= x) }}; END")
    assert isinstance(p, Msg) and p.action == "!"
    assert [n for n, _ in p.binders] == ["x", "b"]
    assert isinstance(p.tail, End)


def test_parse_choice_and_loop():
    p = parse_protocol("mu r. (<! (x : int)> MSG x; r) <+> (END)")
    assert isinstance(p, Mu)
    assert is_choice(p.body)


def test_parse_rejects_unbound_names():
    with pytest.raises((ProtoParseError, ProtocolError)):
        parse_protocol("<!> MSG x; END")
    with pytest.raises((ProtoParseError, ProtocolError)):
        parse_protocol("<!> MSG 1; r")


def test_parse_rejects_empty_trusted_tag():
    with pytest.raises((ProtoParseError, ProtocolError)):
        parse_protocol('<! (f : val)> MSG f {{ trusted("") }}; END')


def test_dual_flips_actions_only():
    p = parse_protocol("<! (x : int)> MSG x; <?> MSG x + 2; END")
    d = dual(p)
    assert d.action == "?"
    assert d.tail.action == "!"
    assert canon_key(d.tail.tail) == canon_key(END)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_print_parse_roundtrip(seed):
    p = gen_protocol(random.Random(seed), depth=4)
    text = print_protocol(p)
    q = parse_protocol(text)
    assert alpha_eq(p, q), text


def test_printer_output_is_stable():
    text = "mu r (n : int := 2). if n == 0 then (END) else (<?> MSG 21; r(n - 1))"
    p = parse_protocol(text)
    assert parse_protocol(print_protocol(p)) is not None
    assert alpha_eq(parse_protocol(print_protocol(p)), p)


# ---------------------------------------------------------------------------
# Normalization / unfolding

def test_unfold_substitutes_parameters():
    p = parse_protocol(
        "mu r (n : int := 2). if n == 0 then (END) else (<?> MSG 21; r(n - 1))")
    q, steps = normalize_head(p)
    assert isinstance(q, Msg) and q.action == "?"
    assert q.value == TLit(VInt(21)) or repr(q.value) == repr(TLit(VInt(21)))
    q2, _ = normalize_head(q.tail)
    assert isinstance(q2, Msg)
    q3, _ = normalize_head(q2.tail)
    assert isinstance(q3, End)


def test_normalize_head_reports_unproductive_loop():
    p = Mu("r", (), RecVar("r", ()))
    with pytest.raises(ProtocolError):
        normalize_head(p)


def test_normalize_leaves_undecided_conditional():
    p = parse_protocol(
        "<? (b : bool)> MSG b; if b then (<?> MSG 1; END) else (END)")
    head, _ = normalize_head(p.tail)
    assert isinstance(head, Cond)


# ---------------------------------------------------------------------------
# The five equational laws, on >= 1000 random protocols

N_LAW_TRIALS = 1050


def _pool(seed_base, n, **kw):
    for i in range(n):
        yield gen_protocol(random.Random(seed_base + i), depth=4, **kw)


def test_law_dual_is_an_involution():
    for p in _pool(10_000, N_LAW_TRIALS):
        assert alpha_eq(dual(dual(p)), p)


def test_law_append_left_unit():
    for p in _pool(20_000, N_LAW_TRIALS):
        assert alpha_eq(append(END, p), p)


def test_law_append_right_unit():
    for p in _pool(30_000, N_LAW_TRIALS):
        assert alpha_eq(append(p, END), p)


def test_law_dual_distributes_over_append():
    for i, p in enumerate(_pool(40_000, N_LAW_TRIALS)):
        q = gen_protocol(random.Random(140_000 + i), depth=3)
        assert alpha_eq(dual(append(p, q)), append(dual(p), dual(q)))


def test_law_append_is_associative():
    for i, p in enumerate(_pool(50_000, N_LAW_TRIALS)):
        q = gen_protocol(random.Random(150_000 + i), depth=3)
        r = gen_protocol(random.Random(250_000 + i), depth=3)
        assert alpha_eq(append(append(p, q), r), append(p, append(q, r)))


# ---------------------------------------------------------------------------
# Cross-checks against the finite action-tree oracle

@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_dual_matches_action_tree_oracle(seed):
    p = gen_finite_protocol(random.Random(seed), depth=4)
    assert o_proto_actions(dual(p), 32) == o_dual_actions(
        o_proto_actions(p, 32))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_append_matches_action_tree_oracle(seed):
    rng = random.Random(seed)
    p = gen_finite_protocol(rng, depth=3)
    q = gen_finite_protocol(rng, depth=3)
    got = o_proto_actions(append(p, q), 64)
    want = o_append_actions(o_proto_actions(p, 64), o_proto_actions(q, 64))
    assert got == want


def test_append_rejects_open_continuation():
    q = Msg("!", (), TLit(VInt(1)), Pred(()), RecVar("loose", ()))
    with pytest.raises(OpenAppend):
        append(END, q)


# ---------------------------------------------------------------------------
# Alpha-equivalence sanity

def test_alpha_eq_ignores_binder_names():
    p = parse_protocol("<! (x : int)> MSG x; <?> MSG x + 1; END")
    q = parse_protocol("<! (y : int)> MSG y; <?> MSG y + 1; END")
    r = parse_protocol("<! (y : int)> MSG y; <?> MSG y + 2; END")
    assert alpha_eq(p, q)
    assert not alpha_eq(p, r)


def test_alpha_eq_ignores_loop_names():
    p = parse_protocol("mu r. <!> MSG 1; r")
    q = parse_protocol("mu s. <!> MSG 1; s")
    assert alpha_eq(p, q)


def test_fold_protocol_resolves_ground_conditionals():
    p = parse_protocol("if 1 <= 2 then (<!> MSG 1; END) else (END)")
    assert alpha_eq(fold_protocol(p), parse_protocol("<!> MSG 1; END"))
