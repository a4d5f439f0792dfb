"""Checker behaviour: pinned weakening cases, agreement with the
ground-model reference, and the relational laws (reflexivity,
transitivity, duality, append monotonicity, determinism)."""

import random

import pytest

from sessionkit.brute import BruteUnsupported, brute_subprot
from sessionkit.lang.ast import VInt, VLoc
from sessionkit.protocol.ast import END, Msg
from sessionkit.protocol.ops import ProtocolError, append, choice, dual
from sessionkit.protocol.parser import parse_protocol
from sessionkit.protocol.terms import (
    INT, LOC, PointsTo, Pred, PureP, TBin, TLit, TPair, TRUE_TERM, TVar,
    Trusted, term_free_vars,
)
from sessionkit.subtyping import (
    DEPENDENT_SWAP, END_VS_MSG, ENTAIL_FAIL, HEAD_MISMATCH, VALUE_MISMATCH,
    check_subprot, entails_default, list_repr_oracle, weaken_select_left,
)

from proto_gen import gen_enum_protocol, gen_finite_protocol, gen_protocol


def P(src):
    return parse_protocol(src)


# ---------------------------------------------------------------------------
# Pinned verdicts on the canonical weakening examples


def test_send_pulled_ahead_of_independent_receive():
    left = P("<? (x : int)> MSG x; <!> MSG 20; <!> MSG x + 2; END")
    right = P("<!> MSG 20; <? (x : int)> MSG x; <!> MSG x + 2; END")
    v = check_subprot(left, right)
    assert v.is_yes
    assert "swap-pull" in v.derivation


def test_dependent_send_cannot_be_pulled():
    left = P("<? (x : int)> MSG x; <!> MSG x + 2; END")
    right = P("<! (y : int)> MSG y + 2; <? (x : int)> MSG x; END")
    v = check_subprot(left, right)
    assert v.is_no and v.reason == DEPENDENT_SWAP


def test_dependent_send_rejection_is_left_driven():
    # The hypothetical target of the illegal swap mentions the not yet
    # received variable; built directly since it cannot even be parsed.
    left = P("<? (x : int)> MSG x; <!> MSG x + 2; END")
    right = Msg("!", (), TBin("+", TVar("x"), TLit(VInt(2))), Pred(),
                Msg("?", (("x", INT),), TVar("x"), Pred(), END))
    v = check_subprot(left, right)
    assert v.is_no and v.reason == DEPENDENT_SWAP


def test_binder_reordering():
    left = P("<! (x : int) (y : int)> MSG (x, y); END")
    right = P("<! (y : int) (x : int)> MSG (x, y); END")
    assert check_subprot(left, right).is_yes
    assert check_subprot(right, left).is_yes


def test_binder_reordering_with_dependent_tail():
    left = P("<! (x : int) (y : int)> MSG (x, y); <?> MSG x + y; END")
    right = P("<! (y : int) (x : int)> MSG (x, y); <?> MSG x + y; END")
    assert check_subprot(left, right).is_yes


def test_frame_of_an_opaque_fact():
    left = P('<! (v : int)> MSG v {{ trusted("P") }}; '
             '<? (w : int)> MSG w {{ trusted("Q") }}; END')
    right = P('<! (v : int)> MSG v {{ trusted("P") * trusted("C") }}; '
              '<? (w : int)> MSG w {{ trusted("Q") * trusted("C") }}; END')
    assert check_subprot(left, right).is_yes
    back = check_subprot(right, left)
    assert back.is_no and back.reason == ENTAIL_FAIL


def test_frame_of_a_heap_cell():
    left = P("<! (l : loc) (x : int)> MSG (l, x) {{ pointsto(l, x) }}; "
             "<? (y : int)> MSG y; END")
    right = P("<! (l : loc) (x : int) (m : loc)> MSG (l, x) "
              "{{ pointsto(l, x) * pointsto(m, 0) }}; "
              "<? (y : int)> MSG y {{ pointsto(m, 0) }}; END")
    assert check_subprot(left, right).is_yes
    assert check_subprot(right, left).is_no


def test_ambient_resource_moves_into_the_protocol():
    left = P("<! (l1 : loc) (l2 : loc)> MSG (l1, l2) "
             "{{ pointsto(l1, 20) * pointsto(l2, 22) }}; END")
    home = TLit(VLoc(7))
    right = Msg("!", (("l2", LOC),), TPair(home, TVar("l2")),
                Pred((PointsTo(TVar("l2"), TLit(VInt(22))),)), END)
    frame = (PointsTo(home, TLit(VInt(20))),)
    assert check_subprot(left, right, ambient=frame).is_yes
    bare = check_subprot(left, right)
    assert bare.is_no and bare.reason == ENTAIL_FAIL


LIST_JOB_RAW = ("<! (l : loc) (vs : list val)> MSG l {{ llist(l, vs) }}; "
                "<?> MSG () {{ llist(l, reverse(vs)) }}; ")
LIST_JOB_ELEM = ("<! (l : loc) (xs : list int)> MSG l {{ llistV(l, xs) }}; "
                 "<?> MSG () {{ llistV(l, reverse(xs)) }}; ")


def test_list_ownership_views_relate_under_oracle():
    left = P(LIST_JOB_RAW + "END")
    right = P(LIST_JOB_ELEM + "END")
    assert check_subprot(left, right, oracle=list_repr_oracle).is_yes
    plain = check_subprot(left, right)
    assert plain.is_no and plain.reason == ENTAIL_FAIL


def test_recursive_choice_pair_within_default_fuel():
    left = P("mu r. (" + LIST_JOB_RAW + "r) <+> (END)")
    right = P("mu r. (" + LIST_JOB_ELEM + "r) <+> (END)")
    v = check_subprot(left, right, oracle=list_repr_oracle, fuel=128)
    assert v.is_yes


def test_recursive_unrolling_pair_within_default_fuel():
    left = P("mu r. <! (x : int)> MSG x; <?> MSG x + 2; r")
    right = P("mu r. <! (x : int)> MSG x; <! (y : int)> MSG y; "
              "<?> MSG x + 2; <?> MSG y + 2; r")
    v = check_subprot(left, right, fuel=128)
    assert v.is_yes
    assert "swap-pull" in v.derivation


def test_delegated_endpoint_protocol_may_be_weakened():
    inner_fine = "<? (x : int)> MSG x; <!> MSG 20; <!> MSG x + 2; END"
    inner_coarse = "<!> MSG 20; <? (x : int)> MSG x; <!> MSG x + 2; END"
    left = P("<! (c : loc)> MSG c {{ chanown(c, %s) }}; END" % inner_coarse)
    right = P("<! (c : loc)> MSG c {{ chanown(c, %s) }}; END" % inner_fine)
    assert check_subprot(left, right).is_yes
    assert check_subprot(right, left).is_no


def test_plain_mismatches():
    v = check_subprot(P("<!> MSG 1; END"), P("<?> MSG 1; END"))
    assert v.is_no and v.reason == HEAD_MISMATCH
    v = check_subprot(P("<!> MSG 1; END"), P("<!> MSG 2; END"))
    assert v.is_no and v.reason == VALUE_MISMATCH
    v = check_subprot(P("END"), P("<!> MSG 1; END"))
    assert v.is_no and v.reason == END_VS_MSG
    v = check_subprot(P("<?> MSG 1; END"), P("END"))
    assert v.is_no and v.reason == END_VS_MSG


def test_fuel_exhaustion_is_unknown():
    p = P("mu r. <! (x : int)> MSG x; r")
    v = check_subprot(p, p, fuel=2)
    assert v.kind == "unknown"


def test_entailment_conjunct_weakening():
    l, five = TVar("l"), TLit(VInt(5))
    eq = PureP(TBin("=", TVar("x"), five))
    cell = PointsTo(l, five)
    assert entails_default((eq, cell), (cell,), set()) is not None
    assert entails_default((PureP(TRUE_TERM),), (cell,), set()) is None


# ---------------------------------------------------------------------------
# weaken_select_left


def test_weaken_trivial_choice():
    p = P("(END) <+> (END)")
    got = weaken_select_left(p)
    want = Msg("!", (), TRUE_TERM, Pred(), END)
    from sessionkit.protocol.ops import alpha_eq
    assert alpha_eq(got, want)


def test_weaken_requires_a_sender_choice():
    with pytest.raises(ProtocolError):
        weaken_select_left(P("<!> MSG 1; END"))
    with pytest.raises(ProtocolError):
        weaken_select_left(P("(END) <&> (END)"))


def test_weaken_select_left_random():
    rng = random.Random(7121)
    for _ in range(100):
        p = gen_finite_protocol(rng, 3)
        q = gen_finite_protocol(rng, 3)
        both = choice("!", p, q)
        v = check_subprot(both, weaken_select_left(both))
        assert v.is_yes


# ---------------------------------------------------------------------------
# Agreement with the ground-model reference on the enumerable fragment


def _weaken_copy(rng, p):
    """Payload-level weakening that keeps the relation to p valid."""
    if not isinstance(p, Msg):
        return p
    if p.action == "!":
        extra = PureP(TBin("<=", TLit(VInt(0)), TLit(VInt(rng.randint(0, 3)))))
        return Msg("!", p.binders, p.value, Pred(p.payload.atoms + (extra,)),
                   p.tail)
    return Msg("?", p.binders, p.value, Pred(), p.tail)


def _swap_copy(p):
    """Hoist a leading independent send over the receive in front of it."""
    if not (isinstance(p, Msg) and p.action == "?"
            and isinstance(p.tail, Msg) and p.tail.action == "!"):
        return p
    recv, send = p, p.tail
    bound = {n for n, _ in recv.binders}
    used = set(term_free_vars(send.value))
    for a in send.payload.atoms:
        if a.__class__ is PureP:
            used |= term_free_vars(a.term)
    if used & bound or {n for n, _ in send.binders} & bound:
        return p
    return Msg("!", send.binders, send.value, send.payload,
               Msg("?", recv.binders, recv.value, recv.payload, send.tail))


def test_agreement_with_ground_model():
    rng = random.Random(990331)
    n = yes = true = unknown = 0
    for _ in range(600):
        p = gen_enum_protocol(rng, 3)
        roll = rng.random()
        if roll < 0.25:
            q = p
        elif roll < 0.45:
            q = _weaken_copy(rng, p)
        elif roll < 0.60:
            q = _swap_copy(p)
        else:
            q = gen_enum_protocol(rng, 3)
        n += 1
        v = check_subprot(p, q)
        holds = brute_subprot(p, q)
        if v.is_yes:
            yes += 1
            assert holds, "checker accepted a pair the ground model refutes"
        elif v.kind == "unknown":
            unknown += 1
        if holds:
            true += 1
    assert n >= 500
    assert unknown < 0.05 * n
    # the sample must actually contain related pairs on both views
    assert yes >= 80 and true >= 80


def test_ground_model_basics():
    assert brute_subprot(P("END"), P("END"), 1)
    assert not brute_subprot(P("<!> MSG true; END"), P("<?> MSG true; END"), 4)
    with pytest.raises(BruteUnsupported):
        brute_subprot(P("<! (x : int)> MSG x; END"), P("END"))


def test_ground_model_sees_through_choices():
    both = P("(<!> MSG 4; END) <+> (<?> MSG 9; END)")
    left = P("<!> MSG true; <!> MSG 4; END")
    assert brute_subprot(both, left)
    assert not brute_subprot(both, P("<!> MSG true; <!> MSG 5; END"))


# ---------------------------------------------------------------------------
# Relational laws on generated cases


def _frame_copy(p, tag):
    """Add an opaque fact to the first send and the first receive after
    it; identity when the protocol has no such pair on its spine."""
    msgs = []
    cur = p
    while isinstance(cur, Msg):
        msgs.append([cur.action, cur.binders, cur.value, cur.payload])
        cur = cur.tail
    send = next((i for i, m in enumerate(msgs) if m[0] == "!"), None)
    if send is None:
        return p
    recv = next((i for i in range(send + 1, len(msgs))
                 if msgs[i][0] == "?"), None)
    if recv is None:
        return p
    fact = Trusted(tag)
    msgs[send][3] = Pred(msgs[send][3].atoms + (fact,))
    msgs[recv][3] = Pred(msgs[recv][3].atoms + (fact,))
    out = cur
    for a, b, v, pl in reversed(msgs):
        out = Msg(a, b, v, pl, out)
    return out


def _spineable(rng):
    from sessionkit.protocol.ops import fold_protocol
    return fold_protocol(gen_protocol(rng, 3, allow_mu=False,
                                      allow_cond=False))


def test_reflexive_on_random_protocols():
    rng = random.Random(44002)
    for _ in range(150):
        p = gen_protocol(rng, 4)
        assert check_subprot(p, p).is_yes


def test_transitive_and_dual_on_derived_chains():
    rng = random.Random(58111)
    hits = tried = 0
    while hits < 100:
        tried += 1
        assert tried <= 2000, "not enough related chains generated"
        p = _spineable(rng)
        q = _swap_copy(_frame_copy(p, "c%d" % tried))
        r = _frame_copy(q, "d%d" % tried)
        if check_subprot(p, q).is_yes and check_subprot(q, r).is_yes:
            hits += 1
            assert check_subprot(p, r).is_yes
            assert check_subprot(dual(r), dual(p)).is_yes


def test_append_monotone():
    rng = random.Random(66120)
    hits = tried = 0
    while hits < 60:
        tried += 1
        assert tried <= 2000, "not enough related pairs generated"
        p = _spineable(rng)
        r = _spineable(rng)
        q = _frame_copy(p, "e%d" % tried)
        s = _swap_copy(r)
        if check_subprot(p, q).is_yes and check_subprot(r, s).is_yes:
            hits += 1
            assert check_subprot(append(p, r), append(q, s)).is_yes


def test_verdicts_are_deterministic():
    rng = random.Random(73205)
    pairs = []
    for _ in range(60):
        pairs.append((gen_enum_protocol(rng, 3), gen_enum_protocol(rng, 3)))
        p = gen_protocol(rng, 3)
        pairs.append((p, _frame_copy(p, "t")))

    def observe():
        out = []
        for a, b in pairs:
            v = check_subprot(a, b)
            out.append((v.kind, v.reason, tuple(v.derivation)))
        return out

    assert observe() == observe()
