"""Shared fixtures and naive reference implementations.

The naive helpers recompute definitions directly (prefix scans, transitive
closure) so the optimized library code is always checked against a second,
independently written formulation.
"""

from __future__ import annotations

import random

import pytest

from racekit import Trace, parse_trace
from racekit.gadgets import gen_random_trace
from racekit.trace import ACQUIRE, READ, RELEASE, WRITE

SIGMA_A = b"t1|acq(l)\nt1|w(x)\nt1|rel(l)\nt2|w(x)\nt2|acq(l)\nt2|rel(l)\n"
SIGMA_B = b"t1|w(x)\nt1|acq(l)\nt1|rel(l)\nt2|acq(l)\nt2|rel(l)\nt2|w(x)\n"
SIGMA_C = b"t1|acq(l)\nt1|w(x)\nt1|rel(l)\nt2|acq(l)\nt2|r(x)\nt2|rel(l)\nt2|w(x)\n"
SIGMA_D = (
    b"t1|acq(l1)\nt1|acq(l2)\nt1|w(x)\nt1|rel(l2)\nt1|rel(l1)\n"
    b"t2|acq(l2)\nt2|acq(l3)\nt2|w(x)\nt2|rel(l3)\nt2|rel(l2)\n"
    b"t1|acq(l1)\nt1|acq(l3)\nt1|w(x)\nt1|rel(l3)\nt1|rel(l1)\n"
)


@pytest.fixture
def sigma_a() -> Trace:
    return parse_trace(SIGMA_A)


@pytest.fixture
def sigma_b() -> Trace:
    return parse_trace(SIGMA_B)


@pytest.fixture
def sigma_c() -> Trace:
    return parse_trace(SIGMA_C)


@pytest.fixture
def sigma_d() -> Trace:
    return parse_trace(SIGMA_D)


def random_corpus(
    count: int,
    max_events: int,
    max_threads: int = 16,
    max_locks: int = 8,
    max_vars: int = 8,
    seed: int = 0,
) -> list[Trace]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        out.append(
            gen_random_trace(
                rng.randint(2, max_events),
                rng.randint(1, max_threads),
                rng.randint(0, max_locks),
                rng.randint(1, max_vars),
                seed=rng.randrange(1 << 30),
            )
        )
    return out


def naive_held(trace: Trace) -> list[set[int]]:
    """Held-lock set per event, releases still inside their own section."""
    held: dict[int, set[int]] = {}
    out = []
    for _eid, t, op, a in trace.events:
        h = held.setdefault(t, set())
        if op == ACQUIRE:
            h.add(a)
            out.append(set(h))
        elif op == RELEASE:
            out.append(set(h))
            h.discard(a)
        else:
            out.append(set(h))
    return out


def naive_hb_masks(trace: Trace) -> list[int]:
    """masks[e1] has bit e2 set iff e1 happens-before e2 (strict), computed
    as the transitive closure of program order plus all rel-to-later-acq
    pairs per lock."""
    n = len(trace.events)
    masks = [0] * n
    for i, a in enumerate(trace.events):
        for j in range(i + 1, n):
            b = trace.events[j]
            if a.thread == b.thread:
                masks[i] |= 1 << j
            elif a.op == RELEASE and b.op == ACQUIRE and a.arg == b.arg:
                masks[i] |= 1 << j
    for i in range(n - 1, -1, -1):
        m = masks[i]
        acc = m
        j = 0
        while m:
            if m & 1:
                acc |= masks[j]
            m >>= 1
            j += 1
        masks[i] = acc
    return masks


def naive_conflicting_pairs(trace: Trace) -> list[tuple[int, int]]:
    out = []
    n = len(trace.events)
    for i in range(n):
        a = trace.events[i]
        if a.op not in (READ, WRITE):
            continue
        for j in range(i + 1, n):
            b = trace.events[j]
            if b.op not in (READ, WRITE) or b.arg != a.arg:
                continue
            if a.thread != b.thread and (a.op == WRITE or b.op == WRITE):
                out.append((i, j))
    return out


def naive_hb_races(trace: Trace) -> list[tuple[int, int]]:
    masks = naive_hb_masks(trace)
    return [
        (i, j) for i, j in naive_conflicting_pairs(trace) if not (masks[i] >> j) & 1
    ]


def naive_lockset(trace: Trace, x: int) -> set[int]:
    held = naive_held(trace)
    out = set(range(len(trace.locks)))
    for e in trace.events:
        if e.op in (READ, WRITE) and e.arg == x:
            out &= held[e.id]
    return out
