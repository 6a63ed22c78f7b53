"""Lock-set race detection and race-freeness certificates.

The lock set of a variable is the intersection of the held-lock sets over
all its accesses.  A variable is racy when that intersection is empty and a
conflicting pair exists.  The single-variable pass runs in O(N + L*T) by
keeping, per thread, the complement of the thread's held locks inside the
running intersection B: an access by thread t shrinks B exactly by that
complement, so every lock leaves B at most once.
"""

from __future__ import annotations

from dataclasses import dataclass

from .report import RaceReport
from .trace import ACQUIRE, READ, RELEASE, WRITE, Trace


def lockset_of_variable(trace: Trace, x: int) -> set[int]:
    """Intersection of held-lock sets over accesses of x.

    A variable with no accesses keeps the full lock set.
    """
    b = set(range(len(trace.locks)))
    held: dict[int, set[int]] = {}
    comp: dict[int, set[int]] = {}
    for eid, t, op, a in trace.events:
        if op == ACQUIRE:
            held.setdefault(t, set()).add(a)
            c = comp.get(t)
            if c is None:
                comp[t] = b - held[t]
            else:
                c.discard(a)
        elif op == RELEASE:
            held[t].discard(a)
            if a in b:
                comp.setdefault(t, b - held[t]).add(a)
        elif a == x:
            removed = comp.get(t)
            if removed is None:
                removed = comp[t] = b - held.get(t, set())
            if removed:
                b -= removed
                for u, cu in comp.items():
                    if u != t:
                        cu -= removed
            comp[t] = set()
    return b


def iter_lockset_states(trace: Trace, x: int):
    """Yield (event id, A, B, C) after each event, for invariant checking.

    A is the held-lock set of the event's thread at the event itself (a
    release still inside its own critical section), B the running
    intersection over accesses of x so far, C the complement of A within B.
    """
    b = set(range(len(trace.locks)))
    held: dict[int, set[int]] = {}
    comp: dict[int, set[int]] = {}

    def state_of(t: int) -> tuple[set[int], set[int]]:
        h = held.setdefault(t, set())
        c = comp.get(t)
        if c is None:
            c = comp[t] = b - h
        return h, c

    for eid, t, op, a in trace.events:
        h, c = state_of(t)
        if op == ACQUIRE:
            h.add(a)
            c.discard(a)
            yield eid, frozenset(h), frozenset(b), frozenset(c)
        elif op == RELEASE:
            yield eid, frozenset(h), frozenset(b), frozenset(c)
            h.discard(a)
            if a in b:
                c.add(a)
        else:
            if a == x:
                if c:
                    b -= c
                    for u, cu in comp.items():
                        if u != t:
                            cu -= c
                comp[t] = c = set()
            yield eid, frozenset(h), frozenset(b), frozenset(c)


def variable_conflicts(trace: Trace) -> list[bool]:
    """Per variable: does a conflicting pair exist?

    Equivalent O(1)-state form: some write exists and at least two distinct
    threads access the variable.
    """
    n_vars = len(trace.vars)
    first_thread = [-1] * n_vars
    multi = [False] * n_vars
    wrote = [False] * n_vars
    for _eid, t, op, a in trace.events:
        if op < READ:
            continue
        if op == WRITE:
            wrote[a] = True
        ft = first_thread[a]
        if ft < 0:
            first_thread[a] = t
        elif ft != t:
            multi[a] = True
    return [w and m for w, m in zip(wrote, multi)]


def find_conflicting_pair(trace: Trace, x: int) -> tuple[int, int] | None:
    """Earliest-completing conflicting pair on x: smallest e2, then smallest e1."""
    fa1 = fa2 = None  # first access, first access on another thread
    fw1 = fw2 = None  # same for writes
    for eid, t, op, a in trace.events:
        if op < READ or a != x:
            continue
        if op == WRITE:
            partner = fa1 if fa1 is not None and fa1[1] != t else fa2
        else:
            partner = fw1 if fw1 is not None and fw1[1] != t else fw2
        if partner is not None:
            return partner[0], eid
        if fa1 is None:
            fa1 = (eid, t)
        elif fa2 is None and t != fa1[1]:
            fa2 = (eid, t)
        if op == WRITE:
            if fw1 is None:
                fw1 = (eid, t)
            elif fw2 is None and t != fw1[1]:
                fw2 = (eid, t)
    return None


def _all_locksets(trace: Trace) -> list[set[int]]:
    n_vars = len(trace.vars)
    n_locks = len(trace.locks)
    if n_vars <= n_locks:
        return [lockset_of_variable(trace, x) for x in range(n_vars)]
    # many variables: one pass with packed held-lock masks
    full = (1 << n_locks) - 1
    held = [0] * len(trace.threads)
    inter = [full] * n_vars
    for _eid, t, op, a in trace.events:
        if op == ACQUIRE:
            held[t] |= 1 << a
        elif op == RELEASE:
            held[t] &= ~(1 << a)
        else:
            inter[a] &= held[t]
    return [
        {k for k in range(n_locks) if (m >> k) & 1} for m in inter
    ]


def detect_lockset_race(trace: Trace) -> RaceReport | None:
    """Lock-set detector, O(N*min(L,V)) plus one witness scan."""
    conflicts = variable_conflicts(trace)
    locksets = _all_locksets(trace)
    best: tuple[int, int, int] | None = None
    for x, (has_pair, ls) in enumerate(zip(conflicts, locksets)):
        if has_pair and not ls:
            pair = find_conflicting_pair(trace, x)
            assert pair is not None
            if best is None or (pair[1], pair[0]) < (best[1], best[0]):
                best = (pair[0], pair[1], x)
    if best is None:
        return None
    return RaceReport(
        kind="lockset",
        e1=best[0],
        e2=best[1],
        var=trace.vars.name(best[2]),
        algo="lockset",
    )


PROTECTED = "protected"
NO_CONFLICT = "no-conflict"
RACY = "racy"


@dataclass(frozen=True)
class Claim:
    kind: str
    lock: str | None = None


@dataclass
class Certificate:
    """Per-variable race-freeness claims, verifiable in one trace pass."""

    claims: dict[str, Claim]

    def is_race_free_claim(self) -> bool:
        return all(c.kind != RACY for c in self.claims.values())

    def to_json_obj(self) -> dict:
        out: dict[str, object] = {}
        for var, claim in self.claims.items():
            out[var] = {"lock": claim.lock} if claim.kind == PROTECTED else claim.kind
        return out

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Certificate":
        claims: dict[str, Claim] = {}
        for var, val in obj.items():
            if isinstance(val, dict):
                lock = val.get("lock")
                if not isinstance(lock, str) or set(val) != {"lock"}:
                    raise ValueError(f"bad claim for variable {var!r}: {val!r}")
                claims[var] = Claim(PROTECTED, lock)
            elif val in (NO_CONFLICT, RACY):
                claims[var] = Claim(val)
            else:
                raise ValueError(f"bad claim for variable {var!r}: {val!r}")
        return cls(claims)


def emit_certificate(trace: Trace) -> Certificate:
    """ProtectedBy the smallest lock in the variable's lock set when non-empty,
    else NoConflictingPair when no conflicting pair exists, else Racy."""
    conflicts = variable_conflicts(trace)
    locksets = _all_locksets(trace)
    claims: dict[str, Claim] = {}
    for x in range(len(trace.vars)):
        name = trace.vars.name(x)
        if locksets[x]:
            claims[name] = Claim(PROTECTED, trace.locks.name(min(locksets[x])))
        elif not conflicts[x]:
            claims[name] = Claim(NO_CONFLICT)
        else:
            claims[name] = Claim(RACY)
    return Certificate(claims)


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    reason: str | None = None
    var: str | None = None
    event: int | None = None
    pair: tuple[int, int] | None = None


def verify_certificate(trace: Trace, cert: Certificate) -> VerifyResult:
    """Check a certificate against a trace in one pass.

    Structural rejects first (racy claim, unknown names, uncovered variable),
    then the earliest claim violation in trace order: an access without the
    promised lock, or a completed conflicting pair on a no-conflict variable.
    """
    for var in sorted(cert.claims):
        if cert.claims[var].kind == RACY:
            return VerifyResult(False, "racy-claim", var=var)
    for var in sorted(cert.claims):
        claim = cert.claims[var]
        if var not in trace.vars:
            return VerifyResult(False, "unknown-variable", var=var)
        if claim.kind == PROTECTED and claim.lock not in trace.locks:
            return VerifyResult(False, "unknown-lock", var=var)
    for x in range(len(trace.vars)):
        if trace.vars.name(x) not in cert.claims:
            return VerifyResult(False, "missing-variable", var=trace.vars.name(x))

    guard: dict[int, int] = {}
    watch: dict[int, list] = {}
    for var, claim in cert.claims.items():
        x = trace.vars.index(var)
        if claim.kind == PROTECTED:
            guard[x] = trace.locks.index(claim.lock)
        else:
            watch[x] = [None, None, None, None]  # fa1, fa2, fw1, fw2

    held: dict[int, set[int]] = {}
    for eid, t, op, a in trace.events:
        if op == ACQUIRE:
            held.setdefault(t, set()).add(a)
            continue
        if op == RELEASE:
            held[t].discard(a)
            continue
        lock = guard.get(a)
        if lock is not None:
            if lock not in held.get(t, ()):
                return VerifyResult(
                    False,
                    "unprotected-access",
                    var=trace.vars.name(a),
                    event=eid,
                )
            continue
        st = watch[a]
        fa1, fa2, fw1, fw2 = st
        if op == WRITE:
            partner = fa1 if fa1 is not None and fa1[1] != t else fa2
        else:
            partner = fw1 if fw1 is not None and fw1[1] != t else fw2
        if partner is not None:
            return VerifyResult(
                False,
                "conflicting-pair",
                var=trace.vars.name(a),
                event=eid,
                pair=(partner[0], eid),
            )
        if fa1 is None:
            st[0] = (eid, t)
        elif fa2 is None and t != fa1[1]:
            st[1] = (eid, t)
        if op == WRITE:
            if fw1 is None:
                st[2] = (eid, t)
            elif fw2 is None and t != fw1[1]:
                st[3] = (eid, t)
    return VerifyResult(True)
