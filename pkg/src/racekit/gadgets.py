"""Combinatorial instances, brute-force solvers, and benchmark trace generators.

Orthogonal-vectors and hitting-set instances are the ground truth for the
hardness-reduction generators: each generator turns an instance into a trace
whose race verdict (under the matching detector) equals the solver's verdict.
Vectors are stored as int bitmasks with bit i holding coordinate i, i.e. the
leftmost character of the file format's 0/1 line is the lowest bit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .trace import Trace, TraceBuilder


@dataclass(frozen=True)
class OvInstance:
    """k = 2 or 3 equally sized sets of d-dimensional 0/1 vectors."""

    kind: str  # "ov2" | "ov3"
    d: int
    parts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        want = 2 if self.kind == "ov2" else 3
        if self.kind not in ("ov2", "ov3") or len(self.parts) != want:
            raise ValueError(f"bad instance: kind {self.kind}, {len(self.parts)} parts")
        if len({len(p) for p in self.parts}) != 1:
            raise ValueError("parts must have equal sizes")

    @property
    def n(self) -> int:
        return len(self.parts[0])


@dataclass(frozen=True)
class HsInstance:
    """Hitting set: does some x in X satisfy x . y != 0 for every y in Y?"""

    d: int
    xs: tuple[int, ...]
    ys: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ys):
            raise ValueError("X and Y must have equal sizes")

    @property
    def n(self) -> int:
        return len(self.xs)


def solve_ov2_bruteforce(inst: OvInstance) -> tuple[int, int] | None:
    """Lexicographically first orthogonal pair, or None."""
    a1, a2 = inst.parts
    for i, x in enumerate(a1):
        for j, y in enumerate(a2):
            if not x & y:
                return i, j
    return None


def solve_ov3_bruteforce(inst: OvInstance) -> tuple[int, int, int] | None:
    a1, a2, a3 = inst.parts
    for i, x in enumerate(a1):
        for j, y in enumerate(a2):
            xy = x & y
            for k, z in enumerate(a3):
                if not xy & z:
                    return i, j, k
    return None


def solve_hs_bruteforce(inst: HsInstance) -> int | None:
    for i, x in enumerate(inst.xs):
        if all(x & y for y in inst.ys):
            return i
    return None


def _vector_of_line(line: str, d: int, lineno: int) -> int:
    if len(line) != d or set(line) - {"0", "1"}:
        raise ValueError(f"line {lineno}: expected a {d}-character 0/1 vector")
    mask = 0
    for i, ch in enumerate(line):
        if ch == "1":
            mask |= 1 << i
    return mask


def parse_instance(data: bytes) -> OvInstance | HsInstance:
    """Instance file: header `ov2|ov3|hs <n> <d>`, vectors as 0/1 lines,
    parts separated by `--` lines."""
    lines = data.decode("utf-8").split("\n")
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln]
    if not rows:
        raise ValueError("empty instance file")
    head = rows[0][1].split()
    if len(head) != 3 or head[0] not in ("ov2", "ov3", "hs"):
        raise ValueError(f"line {rows[0][0]}: bad header {rows[0][1]!r}")
    kind = head[0]
    try:
        n, d = int(head[1]), int(head[2])
    except ValueError:
        raise ValueError(f"line {rows[0][0]}: bad header {rows[0][1]!r}") from None
    if n < 0 or d < 1:
        raise ValueError(f"line {rows[0][0]}: need n >= 0 and d >= 1")
    parts: list[tuple[int, ...]] = []
    current: list[int] = []
    for lineno, ln in rows[1:]:
        if ln == "--":
            parts.append(tuple(current))
            current = []
        else:
            current.append(_vector_of_line(ln, d, lineno))
    parts.append(tuple(current))
    want = {"ov2": 2, "ov3": 3, "hs": 2}[kind]
    if len(parts) != want:
        raise ValueError(f"expected {want} parts, found {len(parts)}")
    for p in parts:
        if len(p) != n:
            raise ValueError(f"part has {len(p)} vectors, header says {n}")
    if kind == "hs":
        return HsInstance(d=d, xs=parts[0], ys=parts[1])
    return OvInstance(kind=kind, d=d, parts=tuple(parts))


def write_instance(inst: OvInstance | HsInstance) -> bytes:
    if isinstance(inst, HsInstance):
        kind, parts = "hs", (inst.xs, inst.ys)
    else:
        kind, parts = inst.kind, inst.parts
    d = inst.d
    out = [f"{kind} {inst.n} {d}\n"]
    for ix, part in enumerate(parts):
        if ix:
            out.append("--\n")
        for mask in part:
            out.append("".join("1" if (mask >> i) & 1 else "0" for i in range(d)) + "\n")
    return "".join(out).encode("utf-8")


def gen_random_ov_instance(kind: str, n: int, d: int, seed: int = 0) -> OvInstance:
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = random.Random(seed)
    k = 2 if kind == "ov2" else 3
    parts = tuple(
        tuple(rng.getrandbits(d) for _ in range(n)) for _ in range(k)
    )
    return OvInstance(kind=kind, d=d, parts=parts)


def gen_random_hs_instance(n: int, d: int, seed: int = 0) -> HsInstance:
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = random.Random(seed)
    xs = tuple(rng.getrandbits(d) for _ in range(n))
    ys = tuple(rng.getrandbits(d) for _ in range(n))
    return HsInstance(d=d, xs=xs, ys=ys)


def _cs(b: TraceBuilder, thread: str, lock: str) -> None:
    b.acquire(thread, lock)
    b.release(thread, lock)


def gen_ov_to_hb(inst: OvInstance) -> Trace:
    """OV to happens-before gadget.

    Per vector x a block of d+1 threads chained through the per-vector lock:
    the head thread writes z, the coordinate threads pick up lock l_i when
    x[i] = 1, and the last vector holding coordinate i hands off to every
    reader-side lock l_(y,i).  Reader threads collect their coordinate locks
    and read z.  The write of x's block reaches y's read through HB exactly
    when x and y share a coordinate, so a write-read HB race means an
    orthogonal pair.
    """
    if inst.kind != "ov2":
        raise ValueError("gadget needs an ov2 instance")
    a1, a2 = inst.parts
    n, d = inst.n, inst.d
    last_with = [-1] * d
    for a, x in enumerate(a1):
        for i in range(d):
            if (x >> i) & 1:
                last_with[i] = a
    b = TraceBuilder()
    for a, x in enumerate(a1):
        head = f"x{a + 1}_0"
        b.write(head, "z")
        _cs(b, head, f"lx{a + 1}")
        for i in range(1, d + 1):
            t = f"x{a + 1}_{i}"
            _cs(b, t, f"lx{a + 1}")
            if (x >> (i - 1)) & 1:
                _cs(b, t, f"li{i}")
                if last_with[i - 1] == a:
                    for y in range(n):
                        _cs(b, t, f"ly{y + 1}_{i}")
    for y, yv in enumerate(a2):
        t = f"y{y + 1}"
        for i in range(1, d + 1):
            if (yv >> (i - 1)) & 1:
                _cs(b, t, f"ly{y + 1}_{i}")
        b.read(t, "z")
    return b.build()


def gen_ov_to_lockcover(inst: OvInstance) -> Trace:
    """OV to lock-cover gadget: one write per vector, nested inside the
    locks of its 1-coordinates; disjoint lock sets = orthogonal vectors."""
    if inst.kind != "ov2":
        raise ValueError("gadget needs an ov2 instance")
    b = TraceBuilder()
    for part, thread in zip(inst.parts, ("t1", "t2")):
        for v in part:
            locks = [k for k in range(inst.d) if (v >> k) & 1]
            for k in locks:
                b.acquire(thread, f"l{k + 1}")
            b.write(thread, "x")
            for k in reversed(locks):
                b.release(thread, f"l{k + 1}")
    return b.build()


def gen_hs_to_lockset(inst: HsInstance) -> Trace:
    """Hitting set to lock-set gadget.

    Thread t_j (one per coordinate) holds the locks of vectors y with
    y[j] = 0 around writes to the variables of vectors x with x[j] = 1;
    thread t_0 writes every variable under all locks.  Variable z_k keeps an
    empty lock set and a conflicting pair exactly when x_k hits all of Y.
    """
    n, d = inst.n, inst.d
    b = TraceBuilder()
    for j in range(d):
        t = f"t{j + 1}"
        locks = [i for i in range(n) if not (inst.ys[i] >> j) & 1]
        for i in locks:
            b.acquire(t, f"l{i + 1}")
        for k in range(n):
            if (inst.xs[k] >> j) & 1:
                b.write(t, f"z{k + 1}")
        for i in reversed(locks):
            b.release(t, f"l{i + 1}")
    for i in range(n):
        b.acquire("t0", f"l{i + 1}")
    for k in range(n):
        b.write("t0", f"z{k + 1}")
    for i in reversed(range(n)):
        b.release("t0", f"l{i + 1}")
    return b.build()


def gen_ov3_to_syncp(inst: OvInstance) -> Trace:
    """Three-set OV to sync-preserving gadget.

    Writer threads guard w(z) behind lock X and empty sections on the l_k of
    their 1-coordinates; reader threads mirror this with l'_k, lock Y and a
    leading sync on a per-reader lock.  One coordinate thread per k encodes
    the third set's column k as n segments of paired syncs on a dedicated
    lock, grabbing l_k across the first sync and l'_k across the second when
    z_i[k] = 1.  An auxiliary thread interleaves so that, per coordinate
    lock, the merged sync order runs: coordinate thread once, auxiliary
    twice, coordinate twice, ..., auxiliary twice, coordinate once.  Any
    sync-preserving witness for the w(z)/r(z) pair must then cut the
    auxiliary thread after an odd number of its sync rounds, which pins every
    coordinate thread inside one segment i and blocks the cut whenever
    x[k] = y[k] = z_i[k] = 1.
    """
    if inst.kind != "ov3":
        raise ValueError("gadget needs an ov3 instance")
    a1, a2, a3 = inst.parts
    n, d = inst.n, inst.d
    b = TraceBuilder()
    aux = "aux"

    def sync(thread: str, lock: str) -> None:
        b.acquire(thread, lock)
        b.read(thread, "v" + lock)
        b.write(thread, "v" + lock)
        b.release(thread, lock)

    def ls_round(thread: str) -> None:
        for k in range(1, d + 1):
            sync(thread, f"ls{k}")

    def seg_head(k: int, i: int) -> None:
        t = f"c{k}"
        if (a3[i - 1] >> (k - 1)) & 1:
            b.acquire(t, f"la{k}")
        sync(t, f"ls{k}")

    def seg_tail(k: int, i: int) -> None:
        t = f"c{k}"
        if (a3[i - 1] >> (k - 1)) & 1:
            b.acquire(t, f"lb{k}")
            b.release(t, f"la{k}")
            sync(t, f"ls{k}")
            b.release(t, f"lb{k}")
        else:
            sync(t, f"ls{k}")

    for k in range(1, d + 1):
        seg_head(k, 1)
    ls_round(aux)
    for s in range(1, n + 1):
        sync(aux, f"ss{s}")
    b.acquire(aux, "Y")
    ls_round(aux)
    for i in range(1, n):
        for k in range(1, d + 1):
            seg_tail(k, i)
            seg_head(k, i + 1)
        ls_round(aux)
        b.release(aux, "Y")
        b.acquire(aux, "Y")
        ls_round(aux)
    for k in range(1, d + 1):
        seg_tail(k, n)

    for a in range(1, n + 1):
        t = f"x{a}"
        for k in range(1, d + 1):
            if (a1[a - 1] >> (k - 1)) & 1:
                _cs(b, t, f"la{k}")
    for y in range(1, n + 1):
        t = f"y{y}"
        sync(t, f"ss{y}")
        for k in range(1, d + 1):
            if (a2[y - 1] >> (k - 1)) & 1:
                _cs(b, t, f"lb{k}")

    for a in range(1, n + 1):
        t = f"x{a}"
        b.acquire(t, "X")
        b.write(t, "z")
        b.release(t, "X")
    b.acquire(aux, "X")
    b.release(aux, "X")
    b.release(aux, "Y")
    for y in range(1, n + 1):
        t = f"y{y}"
        b.acquire(t, "Y")
        b.read(t, "z")
        b.release(t, "Y")
    return b.build()


def gen_random_trace(
    events: int,
    threads: int,
    locks: int,
    vars: int,
    acquire_prob: float = 0.3,
    seed: int = 0,
) -> Trace:
    """Random well-formed trace, deterministic in the seed.

    Lock discipline by construction: a thread acquires only globally free
    locks and releases only its own innermost lock, so critical sections are
    properly nested and never overlap.  Trailing open sections are allowed.
    """
    if threads < 1 or vars < 1 or locks < 0 or events < 0:
        raise ValueError("need threads >= 1, vars >= 1, locks >= 0, events >= 0")
    rng = random.Random(seed)
    b = TraceBuilder()
    stacks: list[list[int]] = [[] for _ in range(threads)]
    free = set(range(locks))
    for _ in range(events):
        t = rng.randrange(threads)
        tname = f"t{t + 1}"
        if locks and rng.random() < acquire_prob:
            if stacks[t] and (not free or rng.random() < 0.5):
                lock = stacks[t].pop()
                b.release(tname, f"l{lock + 1}")
                free.add(lock)
                continue
            if free:
                lock = rng.choice(sorted(free))
                free.discard(lock)
                stacks[t].append(lock)
                b.acquire(tname, f"l{lock + 1}")
                continue
        x = rng.randrange(vars)
        if rng.random() < 0.5:
            b.read(tname, f"x{x + 1}")
        else:
            b.write(tname, f"x{x + 1}")
    return b.build()
