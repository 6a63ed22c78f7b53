from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SIGMA_A, SIGMA_B, SIGMA_C, SIGMA_D, naive_held, random_corpus
from racekit.trace import (
    ACQUIRE,
    READ,
    RELEASE,
    WRITE,
    Event,
    NameTable,
    ParseError,
    TraceBuilder,
    WellFormednessError,
    build_index,
    conflicting,
    parse_trace,
    validate,
    write_trace,
)


def test_parse_roundtrip_fixtures():
    for raw in (SIGMA_A, SIGMA_B, SIGMA_C, SIGMA_D):
        tr = parse_trace(raw)
        assert write_trace(tr) == raw
        assert parse_trace(write_trace(tr)) == tr


def test_parse_skips_comments_and_blank_lines():
    raw = b"# header\n\nt1|w(x)\n\n# mid\nt2|r(x)\n\n"
    tr = parse_trace(raw)
    assert [(e.thread, e.op) for e in tr.events] == [(0, WRITE), (1, READ)]


def test_empty_trace():
    tr = parse_trace(b"")
    assert len(tr) == 0
    assert tr.stats() == (0, 0, 0, 0)
    assert write_trace(tr) == b""


def test_parse_error_carries_line_number():
    with pytest.raises(ParseError) as exc:
        parse_trace(b"t1|w(x)\n# ok\nt1|w x\n")
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "line",
    [
        b"t1|w(x) ",
        b" t1|w(x)",
        b"t1 |w(x)",
        b"t1|w()",
        b"t1|w(x",
        b"t1|fence(x)",
        b"t1|W(x)",
        b"w(x)",
        b"t1|w(x)|t2",
        b"1t|w(x)",
        b"t1|w(-x)",
        b"t1|w(x)\r",
    ],
)
def test_parse_rejects_malformed_records(line):
    with pytest.raises(ParseError) as exc:
        parse_trace(line + b"\n")
    assert exc.value.line == 1


def test_parse_error_on_invalid_utf8():
    with pytest.raises(ParseError) as exc:
        parse_trace(b"\xff\xfe")
    assert exc.value.line == 0


def test_identifier_charset_allows_dots_and_dashes():
    raw = b"T-1.a|acq(l_0.b-c)\nT-1.a|rel(l_0.b-c)\n"
    assert write_trace(parse_trace(raw)) == raw


def test_overlap_is_rejected():
    with pytest.raises(WellFormednessError) as exc:
        parse_trace(b"t1|acq(l)\nt2|acq(l)\n")
    assert exc.value.category == "overlap"
    assert exc.value.event_id == 1


def test_reentrant_acquire_is_rejected():
    with pytest.raises(WellFormednessError) as exc:
        parse_trace(b"t1|acq(l)\nt1|w(x)\nt1|acq(l)\n")
    assert exc.value.category == "reentrant"
    assert exc.value.event_id == 2


def test_unmatched_release_is_rejected():
    with pytest.raises(WellFormednessError) as exc:
        parse_trace(b"t1|rel(l)\n")
    assert exc.value.category == "unmatched-release"
    assert exc.value.event_id == 0

    # a release by the wrong thread is just as unmatched
    with pytest.raises(WellFormednessError) as exc:
        parse_trace(b"t1|acq(l)\nt2|rel(l)\n")
    assert exc.value.category == "unmatched-release"
    assert exc.value.event_id == 1


def test_trailing_open_acquires_are_fine():
    tr = parse_trace(b"t1|acq(l1)\nt2|acq(l2)\nt1|w(x)\n")
    assert len(tr) == 3


def test_hand_over_hand_locking_is_fine():
    raw = b"t1|acq(l1)\nt1|acq(l2)\nt1|rel(l1)\nt1|rel(l2)\n"
    assert write_trace(parse_trace(raw)) == raw


def test_thread_events_partitions_ids():
    tr = parse_trace(SIGMA_D)
    per_thread = tr.thread_events()
    assert sorted(i for ids in per_thread for i in ids) == list(range(len(tr)))
    for ids in per_thread:
        assert ids == sorted(ids)
    assert per_thread[0] == [0, 1, 2, 3, 4, 10, 11, 12, 13, 14]


def test_stats_counts_distinct_identifiers():
    tr = parse_trace(SIGMA_D)
    assert tr.stats() == (15, 2, 3, 1)


def test_conflicting_truth_table():
    w0 = Event(0, 0, WRITE, 0)
    r1 = Event(1, 1, READ, 0)
    w1 = Event(2, 1, WRITE, 0)
    wy = Event(3, 1, WRITE, 1)
    r0 = Event(4, 0, READ, 0)
    acq = Event(5, 1, ACQUIRE, 0)
    tr = parse_trace(b"")
    assert conflicting(tr, w0, r1)
    assert conflicting(tr, w0, w1)
    assert conflicting(tr, r0, w1)
    assert not conflicting(tr, w0, wy)  # different variable
    assert not conflicting(tr, r0, r1)  # two reads
    assert not conflicting(tr, w0, r0)  # same thread
    assert not conflicting(tr, w0, acq)  # not an access


def test_event_is_access():
    assert Event(0, 0, READ, 0).is_access()
    assert Event(0, 0, WRITE, 0).is_access()
    assert not Event(0, 0, ACQUIRE, 0).is_access()
    assert not Event(0, 0, RELEASE, 0).is_access()


def test_builder_check_flag():
    b = TraceBuilder()
    b.release("t1", "l")
    with pytest.raises(WellFormednessError):
        b.build()
    tr = b.build(check=False)
    assert [e.op for e in tr.events] == [RELEASE]


def test_name_table_basics():
    nt = NameTable()
    assert nt.intern("a") == 0
    assert nt.intern("b") == 1
    assert nt.intern("a") == 0
    assert nt.index("b") == 1
    assert nt.name(0) == "a"
    assert "a" in nt and "c" not in nt
    assert len(nt) == 2
    assert nt == NameTable(["a", "b"])
    assert nt != NameTable(["b", "a"])
    assert nt.names() == ["a", "b"]


def test_build_index_on_random_traces():
    for tr in random_corpus(80, 120, seed=11):
        index = build_index(tr)
        held = naive_held(tr)
        for e in tr.events:
            assert set(index.held[e.id]) == held[e.id]

        # match is a same-thread, same-lock involution pairing acq before rel
        for a, b in index.match.items():
            assert index.match[b] == a
            lo, hi = min(a, b), max(a, b)
            el, eh = tr.events[lo], tr.events[hi]
            assert el.op == ACQUIRE and eh.op == RELEASE
            assert el.thread == eh.thread and el.arg == eh.arg

        # pos ranks acquire and release events per lock independently
        ranks: dict[tuple[int, int], int] = {}
        lw: dict[int, int] = {}
        for e in tr.events:
            if e.op in (ACQUIRE, RELEASE):
                key = (e.op, e.arg)
                ranks[key] = ranks.get(key, 0) + 1
                assert index.pos[e.id] == ranks[key]
            else:
                assert index.pos[e.id] == 0
                if e.op == READ:
                    assert index.last_write[e.id] == lw.get(e.arg)
                else:
                    lw[e.arg] = e.id


@given(
    events=st.lists(
        st.tuples(
            st.integers(0, 2),
            st.sampled_from([ACQUIRE, RELEASE, READ, WRITE]),
            st.integers(0, 1),
        ),
        max_size=20,
    )
)
@settings(max_examples=120, deadline=None)
def test_validate_matches_direct_simulation(events):
    evs = [Event(i, t, op, a) for i, (t, op, a) in enumerate(events)]

    open_by: dict[int, int] = {}
    expected = None
    for e in evs:
        if e.op == ACQUIRE:
            if e.arg in open_by:
                kind = "reentrant" if open_by[e.arg] == e.thread else "overlap"
                expected = (e.id, kind)
                break
            open_by[e.arg] = e.thread
        elif e.op == RELEASE:
            if open_by.get(e.arg) != e.thread:
                expected = (e.id, "unmatched-release")
                break
            del open_by[e.arg]

    if expected is None:
        validate(evs)
    else:
        with pytest.raises(WellFormednessError) as exc:
            validate(evs)
        assert (exc.value.event_id, exc.value.category) == expected


@given(
    events=st.integers(2, 60),
    threads=st.integers(1, 5),
    locks=st.integers(0, 3),
    variables=st.integers(1, 3),
    seed=st.integers(0, 10**6),
)
@settings(max_examples=60, deadline=None)
def test_roundtrip_on_generated_traces(events, threads, locks, variables, seed):
    from racekit.gadgets import gen_random_trace

    tr = gen_random_trace(events, threads, locks, variables, seed=seed)
    assert parse_trace(write_trace(tr)) == tr
