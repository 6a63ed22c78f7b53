"""Lock-cover race detection and the single-variable export to OV.

A lock-cover race is a conflicting pair whose held-lock sets are disjoint.
The detector is the definitional quadratic scan with packed bit-vectors; the
export turns a single-variable trace into an orthogonal-vectors instance
whose solutions are exactly the lock-cover races.
"""

from __future__ import annotations

from .gadgets import OvInstance
from .report import RaceReport
from .trace import ACQUIRE, READ, RELEASE, Trace


def detect_lockcover_race(trace: Trace) -> RaceReport | None:
    """First conflicting pair with disjoint held locks, ordered by (e2, e1).

    Held-lock sets are packed into ints, so each disjointness test is one
    AND.  The scan visits accesses in trace order and pairs each against all
    earlier accesses of its variable.
    """
    held = [0] * len(trace.threads)
    seen: dict[int, list[tuple[int, int, int, int]]] = {}
    for eid, t, op, a in trace.events:
        if op == ACQUIRE:
            held[t] |= 1 << a
            continue
        if op == RELEASE:
            held[t] &= ~(1 << a)
            continue
        mask = held[t]
        rows = seen.setdefault(a, [])
        for e1, t1, op1, m1 in rows:
            if t1 == t or (op1 == READ and op == READ):
                continue
            if not m1 & mask:
                return RaceReport(
                    kind="lockcover",
                    e1=e1,
                    e2=eid,
                    var=trace.vars.name(a),
                    algo="lockcover",
                )
        rows.append((eid, t, op, mask))
    return None


def export_singlevar_to_ov(trace: Trace) -> OvInstance:
    """Encode a single-variable trace's accesses as an OV instance.

    One vector per access over d = l + k + 1 coordinates: one per distinct
    lock held at any access (l of them), a one-hot thread block (k threads),
    and a read flag.  Two accesses are orthogonal exactly when they form a
    lock-cover race, so the instance is solvable iff the trace has one.  Both
    OV parts carry the same vectors.  A trace whose accesses touch more than
    one variable is rejected; a trace with no accesses yields an empty
    instance.
    """
    held = [0] * len(trace.threads)
    accesses: list[tuple[int, int, int]] = []  # thread, op, held mask
    var: int | None = None
    for _eid, t, op, a in trace.events:
        if op == ACQUIRE:
            held[t] |= 1 << a
        elif op == RELEASE:
            held[t] &= ~(1 << a)
        else:
            if var is None:
                var = a
            elif a != var:
                raise ValueError(
                    "trace accesses more than one variable: "
                    f"{trace.vars.name(var)} and {trace.vars.name(a)}"
                )
            accesses.append((t, op, held[t]))

    used = 0
    for _t, _op, mask in accesses:
        used |= mask
    coord_of = {}
    for lock in range(len(trace.locks)):
        if (used >> lock) & 1:
            coord_of[lock] = len(coord_of)
    l = len(coord_of)
    k = len(trace.threads)
    d = l + k + 1

    vectors = []
    for t, op, mask in accesses:
        v = 0
        for lock, coord in coord_of.items():
            if (mask >> lock) & 1:
                v |= 1 << coord
        v |= 1 << (l + t)
        if op == READ:
            v |= 1 << (l + k)
        vectors.append(v)
    part = tuple(vectors)
    return OvInstance(kind="ov2", d=d, parts=(part, part))
