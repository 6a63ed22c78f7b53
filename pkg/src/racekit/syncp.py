"""Sync-preserving race oracle and reordering checkers.

A correct reordering of a trace keeps a prefix of every thread, keeps lock
well-formedness, and makes every read observe the same write as in the
original trace.  It is sync-preserving when same-lock acquires keep their
original relative order.  The oracle searches for a sync-preserving correct
reordering that enables both events of a conflicting pair at once; the search
is exponential in the worst case and meant as ground truth for small traces,
with a node budget as the safety valve.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .report import RaceReport
from .trace import ACQUIRE, READ, RELEASE, WRITE, Trace, WellFormednessError, build_index, validate


@dataclass(frozen=True)
class Reordering:
    """Witness: event ids in replay order plus the enabled target pair."""

    events: tuple[int, ...]
    e1: int | None = None
    e2: int | None = None


class BudgetExceeded(Exception):
    """The oracle's node budget ran out before the search finished."""


def _thread_positions(trace: Trace) -> list[int]:
    pos = [0] * len(trace.events)
    counts: dict[int, int] = defaultdict(int)
    for e in trace.events:
        pos[e.id] = counts[e.thread]
        counts[e.thread] += 1
    return pos


def is_correct_reordering(trace: Trace, events: Sequence[int], index=None) -> bool:
    n = len(trace.events)
    seen: set[int] = set()
    for eid in events:
        if not isinstance(eid, int) or not 0 <= eid < n or eid in seen:
            return False
        seen.add(eid)
    tpos = _thread_positions(trace)
    nxt: dict[int, int] = defaultdict(int)
    for eid in events:
        t = trace.events[eid].thread
        if tpos[eid] != nxt[t]:
            return False
        nxt[t] += 1
    try:
        validate([trace.events[eid] for eid in events])
    except WellFormednessError:
        return False
    if index is None:
        index = build_index(trace)
    lastw: dict[int, int] = {}
    for eid in events:
        e = trace.events[eid]
        if e.op == READ and lastw.get(e.arg) != index.last_write[eid]:
            return False
        if e.op == WRITE:
            lastw[e.arg] = eid
    return True


def is_sync_preserving(trace: Trace, events: Sequence[int]) -> bool:
    last: dict[int, int] = {}
    for eid in events:
        e = trace.events[eid]
        if e.op == ACQUIRE:
            if eid < last.get(e.arg, -1):
                return False
            last[e.arg] = eid
    return True


def verify_witness(trace: Trace, witness: Reordering) -> str | None:
    """None when the witness proves a sync-preserving race, else the name of
    the first violated condition."""
    n = len(trace.events)
    e1, e2 = witness.e1, witness.e2
    ids_ok = all(isinstance(i, int) and 0 <= i < n for i in witness.events)
    if not ids_ok or len(set(witness.events)) != len(witness.events):
        return "events violated"
    if e1 is None or e2 is None or not 0 <= e1 < n or not 0 <= e2 < n:
        return "events violated"
    tpos = _thread_positions(trace)
    nxt: dict[int, int] = defaultdict(int)
    for eid in witness.events:
        t = trace.events[eid].thread
        if tpos[eid] != nxt[t]:
            return "downward-closure violated"
        nxt[t] += 1
    try:
        validate([trace.events[eid] for eid in witness.events])
    except WellFormednessError:
        return "well-formedness violated"
    index = build_index(trace)
    lastw: dict[int, int] = {}
    for eid in witness.events:
        e = trace.events[eid]
        if e.op == READ:
            got = lastw.get(e.arg)
            if got != index.last_write[eid]:
                return "lw violated"
        elif e.op == WRITE:
            lastw[e.arg] = eid
    if not is_sync_preserving(trace, witness.events):
        return "sync-order violated"
    chosen = set(witness.events)
    open_locks: dict[int, int] = {}
    for eid in witness.events:
        e = trace.events[eid]
        if e.op == ACQUIRE:
            open_locks[e.arg] = eid
        elif e.op == RELEASE:
            open_locks.pop(e.arg, None)
    for target in (e1, e2):
        if target in chosen:
            return "enabledness violated"
        ev = trace.events[target]
        if nxt[ev.thread] != tpos[target]:
            return "enabledness violated"
        if ev.op == ACQUIRE and ev.arg in open_locks:
            return "enabledness violated"
    a, b = trace.events[e1], trace.events[e2]
    if (
        e1 >= e2
        or a.thread == b.thread
        or a.op not in (READ, WRITE)
        or b.op not in (READ, WRITE)
        or a.arg != b.arg
        or (a.op != WRITE and b.op != WRITE)
    ):
        return "conflict violated"
    return None


def _closure(trace, index, thr, tpos, e1, e2):
    """Per-thread caps on the events any enabling reordering may use.

    Every event below a cap must itself appear in any witness: targets need
    their full thread prefixes, members need their thread predecessors, reads
    need their writer, and all but the latest required acquire of a lock need
    their release.  Returns None when that forces an event at or past a
    target's own position, or a release that does not exist; no witness can
    exist then.
    """
    ev = trace.events
    t1, t2 = ev[e1].thread, ev[e2].thread
    caps = [0] * len(thr)
    caps[t1], caps[t2] = tpos[e1], tpos[e2]
    work = list(thr[t1][: caps[t1]]) + list(thr[t2][: caps[t2]])
    max_acq: dict[int, int] = {}
    lw = index.last_write

    def add(eid: int) -> bool:
        t, p = ev[eid].thread, tpos[eid]
        if t == t1 or t == t2:
            return p < caps[t]
        if p >= caps[t]:
            work.extend(thr[t][caps[t] : p + 1])
            caps[t] = p + 1
        return True

    while work:
        e = ev[work.pop()]
        if e.op == READ:
            w = lw[e.id]
            if w is not None and not add(w):
                return None
        elif e.op == ACQUIRE:
            prev = max_acq.get(e.arg)
            if prev is None:
                max_acq[e.arg] = e.id
                continue
            victim = min(prev, e.id)
            max_acq[e.arg] = max(prev, e.id)
            rel = index.match.get(victim)
            if rel is None or not add(rel):
                return None
    return caps


def _search(trace, index, thr, tpos, caps, e1, e2, budget):
    """Depth-first search for an enabling order within the caps.

    Appends one next-in-thread event at a time.  Releases never block and a
    read whose writer is current imposes nothing on the future, so the
    smallest such event is taken as the only child; otherwise the branch is
    over appendable acquires and writes.  States repeat only through the
    (cut, last-write) pair, which the memo keys on.  Returns the append
    order, or None.
    """
    ev = trace.events
    t1, t2 = ev[e1].thread, ev[e2].thread
    k1, k2 = tpos[e1], tpos[e2]
    nthreads = len(thr)

    var_slot: dict[int, int] = {}
    for t in range(nthreads):
        for eid in thr[t][: caps[t]]:
            a = ev[eid]
            if a.op in (READ, WRITE) and a.arg not in var_slot:
                var_slot[a.arg] = len(var_slot)
    lw_cur = [-1] * len(var_slot)
    lw = index.last_write
    cut = [0] * nthreads
    open_locks: set[int] = set()
    last_acq: dict[int, int] = {}
    trail: list[int] = []
    undo: list[tuple] = []
    memo: set[tuple] = set()

    def children() -> list[int]:
        forced: list[int] = []
        branch: list[int] = []
        for t in range(nthreads):
            if cut[t] >= caps[t]:
                continue
            eid = thr[t][cut[t]]
            a = ev[eid]
            if a.op == RELEASE:
                forced.append(eid)
            elif a.op == READ:
                want = lw[eid]
                got = lw_cur[var_slot[a.arg]]
                if (want is None and got == -1) or want == got:
                    forced.append(eid)
            elif a.op == ACQUIRE:
                if a.arg not in open_locks and eid > last_acq.get(a.arg, -1):
                    branch.append(eid)
            else:
                branch.append(eid)
        if forced:
            return [min(forced)]
        branch.sort()
        return branch

    def do(eid: int) -> None:
        a = ev[eid]
        cut[a.thread] += 1
        rec: tuple = (eid,)
        if a.op == ACQUIRE:
            open_locks.add(a.arg)
            rec = (eid, last_acq.get(a.arg, -1))
            last_acq[a.arg] = eid
        elif a.op == RELEASE:
            open_locks.discard(a.arg)
        elif a.op == WRITE:
            s = var_slot[a.arg]
            rec = (eid, s, lw_cur[s])
            lw_cur[s] = eid
        trail.append(eid)
        undo.append(rec)

    def undo_last() -> None:
        rec = undo.pop()
        eid = rec[0]
        a = ev[eid]
        cut[a.thread] -= 1
        if a.op == ACQUIRE:
            open_locks.discard(a.arg)
            if rec[1] >= 0:
                last_acq[a.arg] = rec[1]
            else:
                del last_acq[a.arg]
        elif a.op == RELEASE:
            open_locks.add(a.arg)
        elif a.op == WRITE:
            lw_cur[rec[1]] = rec[2]
        trail.pop()

    budget[0] -= 1
    if budget[0] < 0:
        raise BudgetExceeded(f"search budget exhausted at pair ({e1}, {e2})")
    if cut[t1] == k1 and cut[t2] == k2:
        return []
    stack: list[list] = [[children(), 0]]
    while stack:
        frame = stack[-1]
        kids, i = frame
        if i >= len(kids):
            memo.add((tuple(cut), tuple(lw_cur)))
            stack.pop()
            if undo:
                undo_last()
            continue
        frame[1] += 1
        do(kids[i])
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded(f"search budget exhausted at pair ({e1}, {e2})")
        if cut[t1] == k1 and cut[t2] == k2:
            return list(trail)
        key = (tuple(cut), tuple(lw_cur))
        if key in memo:
            undo_last()
            continue
        stack.append([children(), 0])
    return None


def detect_syncp_race_oracle(trace: Trace, budget: int = 10_000_000) -> RaceReport | None:
    """Exhaustive sync-preserving race detection.

    Tries every conflicting pair whose events hold no common lock (a shared
    lock makes two sections overlap in any enabling reordering), in (e2, e1)
    order, and reports the first pair some reordering enables.  The witness
    field carries that reordering.  Raises BudgetExceeded when the combined
    search visits more than `budget` states.
    """
    index = build_index(trace)
    thr = trace.thread_events()
    tpos = _thread_positions(trace)
    by_var: dict[int, list] = defaultdict(list)
    for e in trace.events:
        if e.op in (READ, WRITE):
            by_var[e.arg].append(e)
    cands: list[tuple[int, int]] = []
    for evs in by_var.values():
        for i, a in enumerate(evs):
            for b in evs[i + 1 :]:
                if a.thread == b.thread:
                    continue
                if a.op != WRITE and b.op != WRITE:
                    continue
                if index.held[a.id] & index.held[b.id]:
                    continue
                cands.append((b.id, a.id))
    cands.sort()
    left = [budget]
    for e2, e1 in cands:
        caps = _closure(trace, index, thr, tpos, e1, e2)
        if caps is None:
            continue
        trail = _search(trace, index, thr, tpos, caps, e1, e2, left)
        if trail is not None:
            return RaceReport(
                kind="syncp",
                e1=e1,
                e2=e2,
                var=trace.vars.name(trace.events[e1].arg),
                algo="syncp-oracle",
                witness=tuple(trail),
            )
    return None


def construct_ov3_witness(trace: Trace, triple: tuple[int, int, int]) -> Reordering:
    """Closed-form witness for a three-set orthogonality gadget trace.

    `triple` is a 0-based (writer, reader, column-segment) choice; the trace
    must come from the matching generator.  Raises ValueError when the trace
    does not have the gadget shape or the chosen vectors are not orthogonal.
    """
    a, b, i = triple
    names = {trace.threads.name(t): t for t in range(len(trace.threads))}
    c_threads: dict[int, int] = {}
    x_threads: dict[int, int] = {}
    y_threads: dict[int, int] = {}
    aux = names.get("aux")
    for nm, t in names.items():
        m = re.fullmatch(r"([cxy])([1-9][0-9]*)", nm)
        if m:
            {"c": c_threads, "x": x_threads, "y": y_threads}[m.group(1)][int(m.group(2))] = t
    d, n = len(c_threads), len(x_threads)
    if (
        aux is None
        or d < 1
        or n < 1
        or len(y_threads) != n
        or set(c_threads) != set(range(1, d + 1))
        or set(x_threads) != set(range(1, n + 1))
        or set(y_threads) != set(range(1, n + 1))
    ):
        raise ValueError("trace does not have the gadget thread structure")
    if not (0 <= a < n and 0 <= b < n and 0 <= i < n):
        raise ValueError(f"triple {triple} out of range for n={n}")
    thr = trace.thread_events()
    ev = trace.events

    def acquired(t: int, prefix: str) -> set[int]:
        got = set()
        for eid in thr[t]:
            e = ev[eid]
            if e.op == ACQUIRE:
                nm = trace.locks.name(e.arg)
                if nm.startswith(prefix) and nm[len(prefix) :].isdigit():
                    got.add(int(nm[len(prefix) :]))
        return got

    x_bits = acquired(x_threads[a + 1], "la")
    y_bits = acquired(y_threads[b + 1], "lb")
    z_cols: dict[int, list[int]] = {}
    for k in range(1, d + 1):
        evs = thr[c_threads[k]]
        col = []
        p = 0
        while p < len(evs):
            e = ev[evs[p]]
            one = e.op == ACQUIRE and trace.locks.name(e.arg) == f"la{k}"
            col.append(1 if one else 0)
            p += 12 if one else 8
        if p != len(evs) or len(col) != n:
            raise ValueError(f"thread c{k} does not have the gadget segment structure")
        z_cols[k] = col
    for k in range(1, d + 1):
        if k in x_bits and k in y_bits and z_cols[k][i]:
            raise ValueError(f"vectors of {triple} share coordinate {k}")

    cuts = [0] * len(trace.threads)
    for k in range(1, d + 1):
        col = z_cols[k]
        c = sum(12 if col[j] else 8 for j in range(i))
        if col[i]:
            c += 7 if k not in y_bits else 5
        else:
            c += 4
        cuts[c_threads[k]] = c
    cuts[aux] = 4 * d + 4 * n + i * (8 * d + 2)
    cuts[x_threads[a + 1]] = 2 * len(x_bits) + 1
    cuts[y_threads[b + 1]] = 4 + 2 * len(y_bits) + 1
    e1 = thr[x_threads[a + 1]][cuts[x_threads[a + 1]]]
    e2 = thr[y_threads[b + 1]][cuts[y_threads[b + 1]]]
    zvar = trace.vars.name(ev[e1].arg)
    if ev[e1].op != WRITE or ev[e2].op != READ or zvar != "z" or ev[e2].arg != ev[e1].arg:
        raise ValueError("trace does not have the gadget access structure")
    rho = sorted(eid for t in range(len(cuts)) for eid in thr[t][: cuts[t]])
    return Reordering(events=tuple(rho), e1=e1, e2=e2)
