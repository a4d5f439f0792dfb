"""Library helpers (lists, locks, channels) against pure references."""

import random

import pytest

from oracles import ref_group, ref_is_perm
from sessionkit.lang.ast import VInt, VLoc, VPair
from sessionkit.lang.machine import run
from sessionkit.monitor import read_list
from sessionkit.prelude import prepare

from corpus_util import int_list_src  # shared with corpus tests


def _run(src, seed=1, max_steps=10 ** 6):
    res = run(prepare(src), seed=seed, max_steps=max_steps)
    assert res.status == "done", res.status
    return res


def _loc_list(res):
    assert isinstance(res.value, VLoc)
    walked = read_list(res.config.heap, res.value.i)
    assert walked is not None
    return [v.n if isinstance(v, VInt) else v for v in walked[0]]


@pytest.mark.parametrize("xs", [[], [5], [3, 1, 2], list(range(10))])
def test_list_build_and_read(xs):
    res = _run(int_list_src("l", xs))
    assert _loc_list(res) == xs


def test_lcons_prepends_in_place():
    src = ('let: "l" := %s in (lcons #9 "l") ;; "l"'
           % int_list_src("l0", [1, 2]))
    assert _loc_list(_run(src)) == [9, 1, 2]


def test_lsnoc_appends_llength_counts():
    src = ('let: "l" := %s in (lsnoc "l" #9) ;; (llength "l", "l")'
           % int_list_src("l0", [1, 2]))
    res = _run(src)
    assert isinstance(res.value, VPair)
    assert res.value.a.n == 3


def test_lpop_front_and_lisnil():
    src = ('let: "l" := %s in '
           'let: "a" := lpop "l" in '
           'let: "e1" := lisnil "l" in '
           'let: "b" := lpop "l" in '
           'let: "e2" := lisnil "l" in '
           '("a", ("e1", ("b", "e2")))'
           % int_list_src("l0", [7, 8]))
    res = _run(src)
    assert repr(res.value) == "(#7, (#false, (#8, #true)))"


def test_lpop_on_empty_is_stuck():
    res = run(prepare('lpop (lnil #())'), seed=1)
    assert res.status == "stuck"


@pytest.mark.parametrize("xs", [[], [1], [4, 4, 2, 9, 0, 9]])
def test_lreverse(xs):
    src = ('let: "l" := %s in (lreverse "l") ;; "l"'
           % int_list_src("l0", xs))
    assert _loc_list(_run(src)) == list(reversed(xs))


def test_liter_visits_in_order():
    src = ('let: "acc" := ref #0 in '
           'let: "l" := %s in '
           '(liter (λ: "x", "acc" <- (! "acc") * #10 + "x") "l") ;; ! "acc"'
           % int_list_src("l0", [1, 2, 3]))
    assert repr(_run(src).value) == "#123"


@pytest.mark.parametrize("n,expect", [(0, 0), (1, 0), (2, 1), (3, 1),
                                      (7, 3), (10, 5)])
def test_lhalf_is_floor_half(n, expect):
    assert repr(_run("lhalf #%d" % n).value) == "#%d" % expect


@pytest.mark.parametrize("xs", [[], [1], [1, 2], [5, 4, 3, 2, 1],
                                [9, 9, 9, 9]])
def test_lsplit_cuts_at_floor_half(xs):
    src = ('let: "l" := %s in let: "l2" := lsplit "l" in ("l", "l2")'
           % int_list_src("l0", xs))
    res = _run(src)
    first = read_list(res.config.heap, res.value.a.i)[0]
    second = read_list(res.config.heap, res.value.b.i)[0]
    k = len(xs) // 2
    assert [v.n for v in first] == xs[:k]
    assert [v.n for v in second] == xs[k:]


def _ref_merge(a, b):
    out, i, j = [], 0, 0
    while i < len(a) and j < len(b):
        if a[i] <= b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    return out + a[i:] + b[j:]


@pytest.mark.parametrize("trial", range(25))
def test_lmerge_matches_reference(trial):
    rng = random.Random(trial)
    a = sorted(rng.randint(0, 20) for _ in range(rng.randint(0, 8)))
    b = sorted(rng.randint(0, 20) for _ in range(rng.randint(0, 8)))
    src = ('let: "cmp" := (λ: "x" "y", "x" <= "y") in '
           'let: "l1" := %s in let: "l2" := %s in '
           '(lmerge "cmp" "l1" "l2") ;; "l1"'
           % (int_list_src("a0", a), int_list_src("b0", b)))
    assert _loc_list(_run(src)) == _ref_merge(a, b)


# ---------------------------------------------------------------------------
# Locks

def test_lock_mutual_exclusion():
    src = '''
    let: "lk" := newlock #() in
    let: "n" := ref #0 in
    let: "flag" := ref #false in
    let: "bump" := (rec: "bump" "k" :=
      if: "k" = #0 then #() else
      (acquire "lk") ;;
      (let: "v" := ! "n" in ("n" <- "v" + #1)) ;;
      (release "lk") ;;
      "bump" ("k" - #1)) in
    (Fork { ("bump" #20) ;; "flag" <- #true }) ;;
    ("bump" #20) ;;
    (rec: "wait" "u" := if: ! "flag" then ! "n" else "wait" #()) #()
    '''
    for seed in range(1, 8):
        res = _run(src, seed=seed)
        assert repr(res.value) == "#40"


def test_try_acquire_reports_held_lock():
    src = ('let: "lk" := newlock #() in '
           '(acquire "lk") ;; (try_acquire "lk")')
    assert repr(_run(src).value) == "#false"


# ---------------------------------------------------------------------------
# Channels: buffered, so a single thread can talk to itself

def test_channel_roundtrip_single_thread():
    src = '''
    let: "cc" := new_chan #() in
    (send (fst "cc") #1) ;;
    (send (fst "cc") #2) ;;
    (send (snd "cc") #30) ;;
    let: "a" := recv (snd "cc") in
    let: "b" := recv (snd "cc") in
    let: "c" := recv (fst "cc") in
    ("a" + "b") + "c"
    '''
    assert repr(_run(src).value) == "#33"


def test_try_recv_empty_is_none():
    src = ('let: "cc" := new_chan #() in '
           'match: try_recv (fst "cc") with '
           'InjL "_" => #0 | InjR "v" => #1 end')
    assert repr(_run(src).value) == "#0"


# ---------------------------------------------------------------------------
# Reconstructed program-level helpers (framed streaming)

from sessionkit.corpus import RECV_ALL, RECV_N, SEND_ALL, SORT_SERVICE_FG


def test_send_all_recv_all_roundtrip():
    xs = [4, 7, 7, 1]
    src = SEND_ALL + RECV_ALL + '''
    let: "cc" := new_chan #() in
    let: "l" := %s in
    (send_all (fst "cc") "l") ;;
    (select (fst "cc") right) ;;
    let: "out" := lnil #() in
    (recv_all (snd "cc") "out") ;;
    "out"
    ''' % int_list_src("l0", xs)
    assert _loc_list(_run(src)) == xs


def test_recvN_collects_exactly_n():
    src = RECV_N + '''
    let: "cc" := new_chan #() in
    (send (fst "cc") #5) ;; (send (fst "cc") #6) ;; (send (fst "cc") #7) ;;
    let: "out" := lnil #() in
    (recvN (snd "cc") "out" #2) ;;
    "out"
    '''
    assert _loc_list(_run(src)) == [5, 6]


def test_transfer_forwards_framed_stream():
    # The fine-grained sort's tail helper: drain one framed stream into
    # another, converting the terminal flag.
    xs = [3, 1, 2]
    src = SEND_ALL + RECV_ALL + SORT_SERVICE_FG.replace("LBL", "x") + '''
    let: "cc" := new_chan #() in
    let: "dd" := new_chan #() in
    let: "l" := %s in
    (send_all (fst "cc") "l") ;;
    (select (fst "cc") right) ;;
    (transfer (snd "cc") (fst "dd")) ;;
    let: "out" := lnil #() in
    (recv_all (snd "dd") "out") ;;
    "out"
    ''' % int_list_src("l0", xs)
    assert _loc_list(_run(src)) == xs


def test_group_gather_matches_reference():
    # The reducer client gathers runs of equal keys from a key-sorted pair
    # stream; mirror that loop over a local list and compare to ref_group.
    pairs = [(1, 10), (1, 11), (3, 5), (4, 1), (4, 2), (4, 3)]
    items = " ".join('(lsnoc "g0" (#%d, #%d)) ;;' % kv for kv in pairs)
    src = '''
    let: "g0" := lnil #() in
    %s
    let: "out" := lnil #() in
    (rec: "groups" "u" :=
      if: lisnil "g0" then #() else
      let: "kv" := lpop "g0" in
      let: "k" := fst "kv" in
      let: "ns" := lnil #() in
      (lsnoc "ns" (snd "kv")) ;;
      ((rec: "gather" "u" :=
         if: lisnil "g0" then #() else
         match: ! "g0" with
           InjL "_" => #()
         | InjR "p" =>
           if: (fst (fst "p")) = "k"
           then ((lsnoc "ns" (snd (lpop "g0"))) ;; "gather" #())
           else #()
         end) #()) ;;
      (lsnoc "out" ("k", "ns")) ;;
      "groups" #()) #() ;;
    "out"
    ''' % items
    res = _run(src)
    walked = read_list(res.config.heap, res.value.i)[0]
    got = []
    for v in walked:
        k = v.a.n
        ns = [w.n for w in read_list(res.config.heap, v.b.i)[0]]
        got.append((k, ns))
    assert got == ref_group(pairs)


def test_fg_split_partitions_stream():
    # split_fg deals a framed stream round-robin onto two channels.
    xs = [10, 20, 30, 40, 50]
    src = SEND_ALL + RECV_ALL + SORT_SERVICE_FG.replace("LBL", "x") + '''
    let: "cc" := new_chan #() in
    let: "aa" := new_chan #() in
    let: "bb" := new_chan #() in
    let: "l" := %s in
    (send_all (fst "cc") "l") ;;
    (select (fst "cc") right) ;;
    (split_fg (snd "cc") (fst "aa") (fst "bb")) ;;
    let: "oa" := lnil #() in
    let: "ob" := lnil #() in
    (recv_all (snd "aa") "oa") ;;
    (recv_all (snd "bb") "ob") ;;
    ("oa", "ob")
    ''' % int_list_src("l0", xs)
    res = _run(src)
    oa = [v.n for v in read_list(res.config.heap, res.value.a.i)[0]]
    ob = [v.n for v in read_list(res.config.heap, res.value.b.i)[0]]
    assert oa == [10, 30, 50]
    assert ob == [20, 40]
    assert ref_is_perm(oa + ob, xs)
