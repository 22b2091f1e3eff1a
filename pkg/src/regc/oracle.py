"""Post-hoc checker for recorded traces.

Builds the happens-before order from the trace alone (vector clocks in trace
order), reports unordered conflicting accesses, and checks that each
race-free load returns the bytes of the most recent store ordered before it.

Happens-before edge classes:

``po``     program order on one processor
``rule1``  FlushPublish of an acquire -> every Acquire with a larger AcquireSeq
``rule2``  Release(m) -> the next Acquire(m)
``rule3``  every BarrierArrive of an episode -> every BarrierDepart of it
``join``   Fork -> the child's first event; the child's Exit -> JoinEdge
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import trace as tr
from .errors import TraceIntegrityError

EDGE_CLASSES = ("rule1", "rule2", "rule3", "join")
ALL_EDGES = frozenset(EDGE_CLASSES)

OK, VIOLATION, RACE = "ok", "violation", "race"


@dataclass
class Verdict:
    status: str
    rule: str | None = None
    load: tr.Event | None = None
    store: tr.Event | None = None  # None: the required value is the initial zero
    races: list[tuple[tr.Event, tr.Event]] = field(default_factory=list)
    race_count: int = 0

    @property
    def ok(self) -> bool:
        return self.status == OK

    def describe(self) -> str:
        if self.status == OK:
            return "ok"
        if self.status == RACE:
            a, b = self.races[0]
            return (f"race: {self.race_count} unordered conflicting pair(s), first "
                    f"P{a.proc} {a.kind}@{a.addr} (seq {a.seq}) vs P{b.proc} {b.kind}@{b.addr} (seq {b.seq})")
        src = "initial zero" if self.store is None else f"P{self.store.proc} store seq {self.store.seq}"
        return (f"violation of {self.rule}: P{self.load.proc} load seq {self.load.seq} at {self.load.addr} "
                f"read {self.load.value.hex()}, required {src}")


@dataclass
class _Analysis:
    violation: tuple[int, int | None] | None  # (load index, store index)
    races: list[tuple[int, int]]
    race_count: int


def _procs(events) -> int:
    return max((e.proc for e in events), default=-1) + 1


def check_integrity(events) -> None:
    """Structural checks; raises TraceIntegrityError."""
    expect_aseq = 1
    held: dict[int, list[str]] = {}
    holder: dict[str, int] = {}
    exited: set[int] = set()
    arrivals: dict[tuple, set[int]] = {}
    prev = -1
    for e in events:
        if e.seq <= prev:
            raise TraceIntegrityError(f"sequence numbers not increasing at {e.seq}")
        prev = e.seq
        if e.kind not in tr.KINDS:
            raise TraceIntegrityError(f"unknown event kind {e.kind!r}")
        if e.proc in exited:
            raise TraceIntegrityError(f"event {e.seq} after processor {e.proc} exited")
        stack = held.setdefault(e.proc, [])
        if e.kind == tr.ACQUIRE:
            if e.aseq != expect_aseq:
                raise TraceIntegrityError(f"AcquireSeq {e.aseq} at event {e.seq}, expected {expect_aseq}")
            expect_aseq += 1
            if e.lock in holder:
                raise TraceIntegrityError(f"lock {e.lock!r} acquired by P{e.proc} while held by P{holder[e.lock]}")
            holder[e.lock] = e.proc
            stack.append(e.lock)
        elif e.kind == tr.RELEASE:
            if not stack or stack[-1] != e.lock:
                raise TraceIntegrityError(f"release of {e.lock!r} at event {e.seq} is not the innermost held lock")
            stack.pop()
            del holder[e.lock]
        elif e.kind == tr.STORE:
            if (e.tag == tr.CONSISTENT) != bool(stack):
                raise TraceIntegrityError(f"store {e.seq} region tag disagrees with held locks")
            if stack and e.lock != stack[-1]:
                raise TraceIntegrityError(f"store {e.seq} attributed to {e.lock!r}, innermost is {stack[-1]!r}")
        elif e.kind == tr.BARRIER_ARRIVE:
            arrivals.setdefault((e.barrier, e.episode), set()).add(e.proc)
        elif e.kind == tr.BARRIER_DEPART:
            got = arrivals.get((e.barrier, e.episode), set())
            if got != set(e.parties or ()):
                raise TraceIntegrityError(f"departure {e.seq} before all participants arrived")
        elif e.kind == tr.EXIT:
            exited.add(e.proc)


def _analyze(events, edges=ALL_EDGES, stop_at_violation=True, race_limit=64,
             probe: tuple[int, int] | None = None):
    n = _procs(events)
    size = max((e.addr + e.length for e in events if e.kind in (tr.LOAD, tr.STORE)), default=0)
    vc = np.zeros((n, n), dtype=np.int64)
    started = [False] * n
    acq_acc = np.zeros(n, dtype=np.int64)  # rule1 accumulation
    pending_flush: dict[int, np.ndarray] = {}
    last_release: dict[str, np.ndarray] = {}
    episodes: dict[tuple, np.ndarray] = {}
    forked: dict[int, np.ndarray] = {}
    exits: dict[int, np.ndarray] = {}

    lw_proc = np.full(size, -1, dtype=np.int64)
    lw_clk = np.zeros(size, dtype=np.int64)
    lw_evt = np.full(size, -1, dtype=np.int64)
    shadow = np.zeros(size, dtype=np.uint8)
    rd_clk = np.zeros((n, size), dtype=np.int64)
    rd_evt = np.full((n, size), -1, dtype=np.int64)
    racy = np.zeros(size, dtype=bool)
    races: list[tuple[int, int]] = []
    seen_pairs: set[tuple[int, int]] = set()
    race_count = 0
    violation = None
    probe_vc: dict[int, np.ndarray] = {}

    def note_races(pairs):
        nonlocal race_count
        for pr in pairs:
            if pr not in seen_pairs:
                seen_pairs.add(pr)
                race_count += 1
                if len(races) < race_limit:
                    races.append(pr)

    for i, e in enumerate(events):
        p = e.proc
        v = vc[p]
        if not started[p]:
            started[p] = True
            if "join" in edges and p in forked:
                np.maximum(v, forked[p], out=v)
        v[p] += 1
        k = e.kind
        if k == tr.ACQUIRE:
            if "rule1" in edges:
                np.maximum(v, acq_acc, out=v)
                f = pending_flush.pop(p, None)
                if f is not None:
                    np.maximum(acq_acc, f, out=acq_acc)
            if "rule2" in edges and e.lock in last_release:
                np.maximum(v, last_release[e.lock], out=v)
        elif k == tr.FLUSH:
            pending_flush[p] = v.copy()
        elif k == tr.RELEASE:
            last_release[e.lock] = v.copy()
        elif k == tr.BARRIER_ARRIVE:
            key = (e.barrier, e.episode)
            acc = episodes.get(key)
            episodes[key] = v.copy() if acc is None else np.maximum(acc, v)
        elif k == tr.BARRIER_DEPART:
            if "rule3" in edges:
                np.maximum(v, episodes[(e.barrier, e.episode)], out=v)
        elif k == tr.FORK:
            forked[e.other] = v.copy()
        elif k == tr.EXIT:
            exits[p] = v.copy()
        elif k == tr.JOIN:
            if "join" in edges and e.other in exits:
                np.maximum(v, exits[e.other], out=v)
        elif k == tr.LOAD or k == tr.STORE:
            sl = slice(e.addr, e.addr + e.length)
            wp = lw_proc[sl]
            has = (wp >= 0) & (wp != p)
            ww = np.zeros_like(has)
            if has.any():
                ww[has] = v[wp[has]] < lw_clk[sl][has]
            if k == tr.LOAD:
                if ww.any():
                    racy[sl] |= ww
                    note_races((int(s), i) for s in np.unique(lw_evt[sl][ww]))
                rd_clk[p, sl] = v[p]
                rd_evt[p, sl] = i
                if violation is None:
                    got = np.frombuffer(e.value, dtype=np.uint8)
                    bad = (got != shadow[sl]) & ~racy[sl]
                    if bad.any():
                        j = int(np.argmax(bad))
                        s = int(lw_evt[sl][j])
                        violation = (i, None if s < 0 else s)
                        if stop_at_violation:
                            break
            else:
                conflict = ww.copy()
                pairs = []
                if ww.any():
                    pairs.extend((int(s), i) for s in np.unique(lw_evt[sl][ww]))
                for q in range(n):
                    if q == p:
                        continue
                    rr = rd_clk[q, sl] > v[q]
                    if rr.any():
                        conflict |= rr
                        pairs.extend((int(s), i) for s in np.unique(rd_evt[q, sl][rr]))
                if pairs:
                    racy[sl] |= conflict
                    note_races(pairs)
                shadow[sl] = np.frombuffer(e.value, dtype=np.uint8)
                lw_proc[sl] = p
                lw_clk[sl] = v[p]
                lw_evt[sl] = i
        if probe is not None and i in probe:
            probe_vc[i] = v.copy()
    if probe is not None:
        return probe_vc
    return _Analysis(violation, races, race_count)


def happens_before(events, a: int, b: int, edges=ALL_EDGES) -> bool:
    """Whether event index ``a`` happens before event index ``b`` using only
    program order plus the given edge classes."""
    if a >= b:
        return False
    vcs = _analyze(events, edges, stop_at_violation=False, probe=(a, b))
    pa = events[a].proc
    return bool(vcs[b][pa] >= vcs[a][pa])


def attribute(events, load: int, store: int | None) -> str:
    """Name the edge class that orders the required store before the load."""
    if store is None:
        return "po"
    if events[store].proc == events[load].proc:
        return "po"
    for cls in EDGE_CLASSES:
        if happens_before(events, store, load, frozenset([cls])):
            return cls
    return "+".join(EDGE_CLASSES)


def check_regc(events, race_limit: int = 64) -> Verdict:
    """Verdict for a complete trace: violation, then race, then ok."""
    events = list(events)
    check_integrity(events)
    an = _analyze(events, race_limit=race_limit)
    if an.violation is not None:
        li, si = an.violation
        return Verdict(VIOLATION, rule=attribute(events, li, si), load=events[li],
                       store=None if si is None else events[si])
    if an.races:
        return Verdict(RACE, races=[(events[a], events[b]) for a, b in an.races],
                       race_count=an.race_count)
    return Verdict(OK)
