"""Trace model: events, parsing, well-formedness, and derived per-event data.

A trace is a sequence of events, each an operation of one thread: lock
acquire/release or variable read/write.  Threads, locks and variables are
interned to dense integer indices in first-occurrence order, so every event
carries three small ints plus its position.  All detectors consume this
representation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

ACQUIRE = 0
RELEASE = 1
READ = 2
WRITE = 3

OP_NAMES = ("acq", "rel", "r", "w")
OP_CODES = {name: code for code, name in enumerate(OP_NAMES)}

_IDENT = r"[A-Za-z_][A-Za-z0-9_.-]*"
_LINE_RE = re.compile(rf"^({_IDENT})\|(acq|rel|r|w)\(({_IDENT})\)$")


class Event(NamedTuple):
    id: int
    thread: int
    op: int
    arg: int

    def is_access(self) -> bool:
        return self.op >= READ


class ParseError(ValueError):
    """Raised on malformed trace file input; carries the 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class WellFormednessError(ValueError):
    """A lock discipline violation, pinned to the offending event.

    category is one of "overlap" (second thread acquires a held lock),
    "reentrant" (a thread re-acquires its own lock) and "unmatched-release"
    (release without an open acquire by the same thread).
    """

    def __init__(self, event_id: int, category: str, message: str) -> None:
        super().__init__(f"event {event_id}: {category}: {message}")
        self.event_id = event_id
        self.category = category


class NameTable:
    """Bijection between identifier strings and dense indices.

    Indices are assigned in first-occurrence order, which keeps every
    downstream artifact (witness reports, certificates, generated files)
    deterministic.
    """

    __slots__ = ("_index", "_names")

    def __init__(self, names: Iterable[str] = ()) -> None:
        self._index: dict[str, int] = {}
        self._names: list[str] = []
        for name in names:
            self.intern(name)

    def intern(self, name: str) -> int:
        ix = self._index.get(name)
        if ix is None:
            ix = len(self._names)
            self._index[name] = ix
            self._names.append(name)
        return ix

    def index(self, name: str) -> int:
        return self._index[name]

    def name(self, ix: int) -> str:
        return self._names[ix]

    def names(self) -> list[str]:
        return list(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NameTable):
            return NotImplemented
        return self._names == other._names

    def __repr__(self) -> str:
        return f"NameTable({self._names!r})"


@dataclass
class Trace:
    """An immutable-by-convention event sequence plus its identifier tables."""

    events: list[Event]
    threads: NameTable
    locks: NameTable
    vars: NameTable

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.events == other.events
            and self.threads == other.threads
            and self.locks == other.locks
            and self.vars == other.vars
        )

    def stats(self) -> tuple[int, int, int, int]:
        """(N, T, L, V)."""
        return len(self.events), len(self.threads), len(self.locks), len(self.vars)

    def thread_events(self) -> list[list[int]]:
        """Event ids grouped by thread, in trace order (thread order)."""
        per_thread: list[list[int]] = [[] for _ in range(len(self.threads))]
        for e in self.events:
            per_thread[e.thread].append(e.id)
        return per_thread


@dataclass
class DerivedIndex:
    """Per-event quantities shared by the detectors.

    match pairs acquires with their releases in both directions (events with
    no partner are absent).  held[e] is the set of lock indices held by e's
    thread at e; an acquire and its release both belong to their own critical
    section, so both endpoints include the section's lock.  pos[e] is the
    1-based rank of a lock event among same-kind events on its lock (0 for
    accesses).  last_write[e] is, for a read, the id of the write it observes,
    or None when it reads the initial value.
    """

    match: dict[int, int]
    held: list[frozenset[int]]
    pos: list[int]
    last_write: list[int | None]


def validate(events: Iterable[Event]) -> None:
    """Check the lock discipline; raises WellFormednessError on violation.

    Per lock, the event projection must alternate acquire/release with both
    ends of each pair on one thread.  A trailing open acquire is fine (the
    trace is a prefix of a longer execution).
    """
    holder: dict[int, int] = {}
    for e in events:
        if e.op == ACQUIRE:
            owner = holder.get(e.arg)
            if owner is None:
                holder[e.arg] = e.thread
            elif owner == e.thread:
                raise WellFormednessError(
                    e.id, "reentrant", f"thread re-acquires lock {e.arg}"
                )
            else:
                raise WellFormednessError(
                    e.id, "overlap", f"lock {e.arg} already held by thread {owner}"
                )
        elif e.op == RELEASE:
            if holder.get(e.arg) != e.thread:
                raise WellFormednessError(
                    e.id, "unmatched-release", f"lock {e.arg} not held by this thread"
                )
            del holder[e.arg]


def parse_trace(data: bytes) -> Trace:
    """Parse the trace file format; validates well-formedness.

    One event per non-empty line, lines starting with '#' ignored, record
    grammar `<thread>|<op>(<operand>)` with no interior whitespace.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(0, f"not valid UTF-8: {exc}") from None
    builder = TraceBuilder()
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line or line.startswith("#"):
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise ParseError(lineno, f"malformed event record {line!r}")
        thread, op, operand = m.groups()
        builder.add(thread, OP_CODES[op], operand)
    return builder.build()


def write_trace(trace: Trace) -> bytes:
    """Inverse of parse_trace; an empty trace yields empty output."""
    lines = []
    for e in trace.events:
        table = trace.locks if e.op <= RELEASE else trace.vars
        lines.append(
            f"{trace.threads.name(e.thread)}|{OP_NAMES[e.op]}({table.name(e.arg)})\n"
        )
    return "".join(lines).encode("utf-8")


def build_index(trace: Trace) -> DerivedIndex:
    """One forward pass computing match, held, pos and last_write."""
    n = len(trace.events)
    match: dict[int, int] = {}
    held: list[frozenset[int]] = [frozenset()] * n
    pos = [0] * n
    last_write: list[int | None] = [None] * n

    cur_held: dict[int, frozenset[int]] = {}
    open_acq: dict[tuple[int, int], int] = {}
    acq_rank: dict[int, int] = {}
    rel_rank: dict[int, int] = {}
    lw: dict[int, int] = {}

    empty = frozenset()
    for e in trace.events:
        if e.op == ACQUIRE:
            rank = acq_rank.get(e.arg, 0) + 1
            acq_rank[e.arg] = rank
            pos[e.id] = rank
            cur = cur_held.get(e.thread, empty) | {e.arg}
            cur_held[e.thread] = cur
            held[e.id] = cur
            open_acq[(e.thread, e.arg)] = e.id
        elif e.op == RELEASE:
            rank = rel_rank.get(e.arg, 0) + 1
            rel_rank[e.arg] = rank
            pos[e.id] = rank
            cur = cur_held.get(e.thread, empty)
            # the release still belongs to its own critical section
            held[e.id] = cur
            cur_held[e.thread] = cur - {e.arg}
            acq_id = open_acq.pop((e.thread, e.arg))
            match[acq_id] = e.id
            match[e.id] = acq_id
        else:
            held[e.id] = cur_held.get(e.thread, empty)
            if e.op == READ:
                last_write[e.id] = lw.get(e.arg)
            else:
                lw[e.arg] = e.id
    return DerivedIndex(match=match, held=held, pos=pos, last_write=last_write)


def conflicting(trace: Trace, e1: Event, e2: Event) -> bool:
    """Different threads, same variable, at least one write."""
    return (
        e1.thread != e2.thread
        and e1.op >= READ
        and e2.op >= READ
        and e1.arg == e2.arg
        and (e1.op == WRITE or e2.op == WRITE)
    )


class TraceBuilder:
    """Assemble a trace programmatically; identifiers interned as they appear."""

    def __init__(self) -> None:
        self.threads = NameTable()
        self.locks = NameTable()
        self.vars = NameTable()
        self._events: list[Event] = []

    def add(self, thread: str, op: int, operand: str) -> None:
        t = self.threads.intern(thread)
        table = self.locks if op <= RELEASE else self.vars
        a = table.intern(operand)
        self._events.append(Event(len(self._events), t, op, a))

    def acquire(self, thread: str, lock: str) -> None:
        self.add(thread, ACQUIRE, lock)

    def release(self, thread: str, lock: str) -> None:
        self.add(thread, RELEASE, lock)

    def read(self, thread: str, var: str) -> None:
        self.add(thread, READ, var)

    def write(self, thread: str, var: str) -> None:
        self.add(thread, WRITE, var)

    def __len__(self) -> int:
        return len(self._events)

    def build(self, check: bool = True) -> Trace:
        if check:
            validate(self._events)
        return Trace(
            events=self._events,
            threads=self.threads,
            locks=self.locks,
            vars=self.vars,
        )
