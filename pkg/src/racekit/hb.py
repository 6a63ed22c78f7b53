"""Happens-before race detection.

Three interchangeable detectors over the same race notion:

* lockstamp: two O(N*L) passes assign each event an acquire stamp (max rank
  of acquires in its HB past, per lock) and a release stamp (min rank of
  releases in its HB future); a cross-thread pair e1 < e2 is HB-unordered
  exactly when acqls(e2) <= rells(e1) pointwise.  A streaming checker over
  consecutive conflicting pairs then decides race existence.
* djit: the classic O(N*T) vector-clock algorithm.
* graph: reachability in the sparse graph G whose edges are thread
  successorship and release-to-next-acquire; exact but quadratic, kept as
  the differential oracle.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, replace

from .report import RaceReport
from .trace import ACQUIRE, READ, RELEASE, WRITE, Trace

INF = float("inf")

Lockstamp = tuple  # per-lock ranks, ints with INF allowed in release stamps


def leq(a: Lockstamp, b: Lockstamp) -> bool:
    """Pointwise comparison; the lattice order on lockstamps."""
    return all(map(operator.le, a, b))


def hb_unordered(acq2: Lockstamp, rel1: Lockstamp) -> bool:
    """For cross-thread e1 < e2: acqls(e2) <= rells(e1) iff NOT e1 HB e2."""
    return leq(acq2, rel1)


def acquire_lockstamps(trace: Trace) -> list[Lockstamp]:
    """Forward pass; stamp(e)(l) = max rank of acquires of l HB-preceding e.

    Stamps are shared immutable tuples: a fresh tuple is allocated only at
    acquires, every other event aliases its thread's current stamp.
    """
    n_locks = len(trace.locks)
    zero = (0,) * n_locks
    cthread = [zero] * len(trace.threads)
    clock = [zero] * n_locks
    p = [0] * n_locks
    out: list[Lockstamp] = [zero] * len(trace.events)
    for eid, t, op, a in trace.events:
        if op == ACQUIRE:
            p[a] += 1
            merged = list(map(max, cthread[t], clock[a]))
            merged[a] = p[a]
            stamp = tuple(merged)
            cthread[t] = stamp
            out[eid] = stamp
        elif op == RELEASE:
            stamp = cthread[t]
            clock[a] = stamp
            out[eid] = stamp
        else:
            out[eid] = cthread[t]
    return out


def release_lockstamps(trace: Trace) -> list[Lockstamp]:
    """Reverse pass; stamp(e)(l) = min rank of releases of l HB-following e."""
    n_locks = len(trace.locks)
    top = (INF,) * n_locks
    cthread = [top] * len(trace.threads)
    clock = [top] * n_locks
    p = [0] * n_locks
    for e in trace.events:
        if e.op == RELEASE:
            p[e.arg] += 1
    p = [c + 1 for c in p]
    out: list[Lockstamp] = [top] * len(trace.events)
    for eid, t, op, a in reversed(trace.events):
        if op == RELEASE:
            p[a] -= 1
            merged = list(map(min, cthread[t], clock[a]))
            merged[a] = p[a]
            stamp = tuple(merged)
            cthread[t] = stamp
            out[eid] = stamp
        elif op == ACQUIRE:
            stamp = cthread[t]
            clock[a] = stamp
            out[eid] = stamp
        else:
            out[eid] = cthread[t]
    return out


def detect_hb_race_lockstamp(trace: Trace) -> RaceReport | None:
    """Lockstamp HB detector, O(N*L) time.

    The reverse pass keeps release stamps only for access events; the forward
    pass folds the acquire-stamp update and the consecutive-pair check into
    one loop.  Per variable the checker compares each access against the last
    write and, for writes, against the reads seen since then; completeness
    over those pairs is the consecutive-pair lemma.
    """
    n_locks = len(trace.locks)
    events = trace.events

    rells: list[Lockstamp | None] = [None] * len(events)
    top = (INF,) * n_locks
    cthread = [top] * len(trace.threads)
    clock = [top] * n_locks
    p = [0] * n_locks
    for e in events:
        if e.op == RELEASE:
            p[e.arg] += 1
    p = [c + 1 for c in p]
    for eid, t, op, a in reversed(events):
        if op == RELEASE:
            p[a] -= 1
            merged = list(map(min, cthread[t], clock[a]))
            merged[a] = p[a]
            cthread[t] = tuple(merged)
        elif op == ACQUIRE:
            clock[a] = cthread[t]
        else:
            rells[eid] = cthread[t]

    zero = (0,) * n_locks
    acq_c = [zero] * len(trace.threads)
    acq_l = [zero] * n_locks
    pa = [0] * n_locks
    # per variable: writer thread (-1 none), last write id, its release stamp,
    # and reads since that write as (thread, release stamp, id) rows
    tw: dict[int, int] = {}
    w_id: dict[int, int] = {}
    w_rel: dict[int, Lockstamp] = {}
    reads: dict[int, list[tuple[int, Lockstamp, int]]] = {}
    _leq = leq
    for eid, t, op, a in events:
        if op == ACQUIRE:
            pa[a] += 1
            merged = list(map(max, acq_c[t], acq_l[a]))
            merged[a] = pa[a]
            acq_c[t] = tuple(merged)
        elif op == RELEASE:
            acq_l[a] = acq_c[t]
        elif op == READ:
            u = tw.get(a, -1)
            if u >= 0 and u != t and _leq(acq_c[t], w_rel[a]):
                return RaceReport(
                    kind="hb",
                    e1=w_id[a],
                    e2=eid,
                    var=trace.vars.name(a),
                    algo="hb-lockstamp",
                )
            reads.setdefault(a, []).append((t, rells[eid], eid))
        else:
            u = tw.get(a, -1)
            if u >= 0 and u != t and _leq(acq_c[t], w_rel[a]):
                return RaceReport(
                    kind="hb",
                    e1=w_id[a],
                    e2=eid,
                    var=trace.vars.name(a),
                    algo="hb-lockstamp",
                )
            stamp = acq_c[t]
            for ru, rstamp, rid in reads.get(a, ()):
                if ru != t and _leq(stamp, rstamp):
                    return RaceReport(
                        kind="hb",
                        e1=rid,
                        e2=eid,
                        var=trace.vars.name(a),
                        algo="hb-lockstamp",
                    )
            tw[a] = t
            w_id[a] = eid
            w_rel[a] = rells[eid]
            reads[a] = []
    return None


def detect_hb_race_djit(
    trace: Trace, report_all: bool = False
) -> RaceReport | None | list[int]:
    """Vector-clock HB detector, O(N*T) time.

    With report_all, returns the ids of every access racing with some earlier
    event (scanning the whole trace instead of stopping at the first race).
    """
    n_threads = len(trace.threads)
    clocks = [[0] * n_threads for _ in range(n_threads)]
    for t in range(n_threads):
        clocks[t][t] = 1
    lock_rel: dict[int, list[int]] = {}
    # per variable: write clock snapshot + event ids, same for reads
    wvec: dict[int, list[int]] = {}
    wids: dict[int, list[int]] = {}
    rvec: dict[int, list[int]] = {}
    rids: dict[int, list[int]] = {}
    racy: list[int] = []
    _le = operator.le

    def first_violation(snap: list[int], ids: list[int], ct: list[int]) -> int:
        for u, (s, c) in enumerate(zip(snap, ct)):
            if s > c:
                return ids[u]
        raise AssertionError("no violating component")

    for eid, t, op, a in trace.events:
        ct = clocks[t]
        if op == ACQUIRE:
            lv = lock_rel.get(a)
            if lv is not None:
                clocks[t] = ct = list(map(max, ct, lv))
        elif op == RELEASE:
            lock_rel[a] = list(ct)
            ct[t] += 1
        elif op == READ:
            wv = wvec.get(a)
            if wv is not None and not all(map(_le, wv, ct)):
                if not report_all:
                    return RaceReport(
                        kind="hb",
                        e1=first_violation(wv, wids[a], ct),
                        e2=eid,
                        var=trace.vars.name(a),
                        algo="hb-djit",
                    )
                racy.append(eid)
            rv = rvec.get(a)
            if rv is None:
                rv = rvec[a] = [0] * n_threads
                rids[a] = [-1] * n_threads
            rv[t] = ct[t]
            rids[a][t] = eid
        else:
            wv = wvec.get(a)
            bad = wv is not None and not all(map(_le, wv, ct))
            rv = rvec.get(a)
            bad_r = rv is not None and not all(map(_le, rv, ct))
            if bad or bad_r:
                if not report_all:
                    if bad:
                        e1 = first_violation(wv, wids[a], ct)
                    else:
                        e1 = first_violation(rv, rids[a], ct)
                    return RaceReport(
                        kind="hb",
                        e1=e1,
                        e2=eid,
                        var=trace.vars.name(a),
                        algo="hb-djit",
                    )
                racy.append(eid)
            if wv is None:
                wv = wvec[a] = [0] * n_threads
                wids[a] = [-1] * n_threads
            wv[t] = ct[t]
            wids[a][t] = eid
    return racy if report_all else None


def detect_hb_race_auto(trace: Trace) -> RaceReport | None:
    """Dispatch on the cheaper dimension: lockstamps when L < T, else Djit."""
    if len(trace.locks) < len(trace.threads):
        rep = detect_hb_race_lockstamp(trace)
    else:
        rep = detect_hb_race_djit(trace)
    if rep is None:
        return None
    return replace(rep, algo="hb-auto")


@dataclass
class HbGraph:
    """Sparse HB skeleton: thread-successor and release-to-next-acquire edges.

    Reachability between distinct events coincides with HB; every node has
    out-degree at most 2.
    """

    n: int
    succ: list[list[int]]


def build_hb_graph(trace: Trace) -> HbGraph:
    n = len(trace.events)
    succ: list[list[int]] = [[] for _ in range(n)]
    last_of_thread: dict[int, int] = {}
    pending_rel: dict[int, int] = {}
    for eid, t, op, a in trace.events:
        prev = last_of_thread.get(t)
        if prev is not None:
            succ[prev].append(eid)
        last_of_thread[t] = eid
        if op == ACQUIRE:
            rel = pending_rel.pop(a, None)
            if rel is not None:
                succ[rel].append(eid)
        elif op == RELEASE:
            pending_rel[a] = eid
    return HbGraph(n=n, succ=succ)


def reach_bitsets(graph: HbGraph) -> list[int]:
    """masks[i] has bit j set iff j is reachable from i (reflexively).

    All edges point forward in id order, so one reversed sweep suffices.
    """
    masks = [0] * graph.n
    succ = graph.succ
    for i in range(graph.n - 1, -1, -1):
        m = 1 << i
        for j in succ[i]:
            m |= masks[j]
        masks[i] = m
    return masks


def solve_mconn(graph: HbGraph, pairs: list[tuple[int, int]]) -> list[bool]:
    """Per-pair reachability by forward traversal (the quadratic oracle)."""
    out = []
    for src, dst in pairs:
        if src == dst:
            out.append(True)
            continue
        seen = {src}
        stack = [src]
        found = False
        while stack:
            node = stack.pop()
            for j in graph.succ[node]:
                if j == dst:
                    found = True
                    stack.clear()
                    break
                if j not in seen and j < dst:
                    seen.add(j)
                    stack.append(j)
        out.append(found)
    return out


def consecutive_conflicting_pairs(trace: Trace) -> list[tuple[int, int]]:
    """Conflicting pairs with no write to their variable strictly between.

    At most 2N pairs exist: each access pairs backward with the last write,
    and each read pairs forward with at most one later write.  Result is
    sorted by (second id, first id).
    """
    last_write: dict[int, tuple[int, int]] = {}
    reads_since: dict[int, list[tuple[int, int]]] = {}
    pairs: list[tuple[int, int]] = []
    for eid, t, op, a in trace.events:
        if op == READ:
            lw = last_write.get(a)
            if lw is not None and lw[1] != t:
                pairs.append((lw[0], eid))
            reads_since.setdefault(a, []).append((eid, t))
        elif op == WRITE:
            lw = last_write.get(a)
            if lw is not None and lw[1] != t:
                pairs.append((lw[0], eid))
            for rid, rt in reads_since.get(a, ()):
                if rt != t:
                    pairs.append((rid, eid))
            last_write[a] = (eid, t)
            reads_since[a] = []
    return pairs


def detect_hb_race_graph(trace: Trace) -> RaceReport | None:
    """Graph-reachability detector over consecutive conflicting pairs."""
    pairs = consecutive_conflicting_pairs(trace)
    if not pairs:
        return None
    masks = reach_bitsets(build_hb_graph(trace))
    for e1, e2 in pairs:
        if not (masks[e1] >> e2) & 1:
            return RaceReport(
                kind="hb",
                e1=e1,
                e2=e2,
                var=trace.vars.name(trace.events[e2].arg),
                algo="hb-graph",
            )
    return None


def hb_race_pairs_bruteforce(
    trace: Trace, require_read: bool = False
) -> list[tuple[int, int]]:
    """Every HB-unordered conflicting pair, via full reachability.

    Ground truth for the property suites; with require_read only write-read
    and read-write pairs count.
    """
    masks = reach_bitsets(build_hb_graph(trace))
    by_var: dict[int, list[tuple[int, int, int]]] = {}
    for eid, t, op, a in trace.events:
        if op >= READ:
            by_var.setdefault(a, []).append((eid, t, op))
    pairs = []
    for accesses in by_var.values():
        for i, (e1, t1, op1) in enumerate(accesses):
            for e2, t2, op2 in accesses[i + 1 :]:
                if t1 == t2 or (op1 == READ and op2 == READ):
                    continue
                if require_read and op1 != READ and op2 != READ:
                    continue
                if not (masks[e1] >> e2) & 1:
                    pairs.append((e1, e2))
    pairs.sort(key=lambda p: (p[1], p[0]))
    return pairs
