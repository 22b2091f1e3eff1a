"""Resource-manager synchronization services.

* ``GlobalConsistencyLog``: append-only list of invalidation sets. Every lock
  grant delivers the entries above the acquirer's watermark, which is what
  makes ordinary stores visible before *any* later span start.
* ``LockManager``: FIFO mutexes, the global acquire sequence, and per-lock
  payload history (the pending updates for the next acquirers).
* ``BarrierManager``: episodes, arrival bookkeeping and reduction variables.
"""
from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass, field

from .errors import UsageError
from .policies import InvalidationSet, Payload


@dataclass
class LogEntry:
    seq: int
    inv: InvalidationSet


class GlobalConsistencyLog:
    def __init__(self):
        self.entries: list[LogEntry] = []

    @property
    def tail(self) -> int:
        return len(self.entries)

    def append(self, inv: InvalidationSet) -> int:
        seq = len(self.entries) + 1
        self.entries.append(LogEntry(seq, inv))
        return seq

    def after(self, mark: int) -> list[LogEntry]:
        return self.entries[mark:]


@dataclass
class LockState:
    name: str
    holder: int | None = None
    queue: deque = field(default_factory=deque)
    history: list[Payload] = field(default_factory=list)
    release_clock: float = 0.0
    requests: list[int] = field(default_factory=list)
    grants: list[int] = field(default_factory=list)


class LockManager:
    def __init__(self):
        self.locks: dict[str, LockState] = {}
        self.aseq = 0

    def get(self, name: str) -> LockState:
        lk = self.locks.get(name)
        if lk is None:
            lk = self.locks[name] = LockState(name)
        return lk

    def request(self, pid: int, name: str) -> None:
        lk = self.get(name)
        if lk.holder == pid or pid in lk.queue:
            raise UsageError(f"processor {pid} re-acquires lock {name!r}")
        lk.queue.append(pid)
        lk.requests.append(pid)

    def grantable(self, pid: int, name: str) -> bool:
        lk = self.locks[name]
        return lk.holder is None and bool(lk.queue) and lk.queue[0] == pid

    def grant(self, pid: int, name: str) -> int:
        lk = self.locks[name]
        assert self.grantable(pid, name)
        lk.queue.popleft()
        lk.holder = pid
        lk.grants.append(pid)
        self.aseq += 1
        return self.aseq

    def release(self, pid: int, name: str, clock: float) -> LockState:
        lk = self.locks.get(name)
        if lk is None or lk.holder != pid:
            raise UsageError(f"processor {pid} releases lock {name!r} it does not hold")
        lk.holder = None
        lk.release_clock = clock
        return lk

    def record(self, name: str, payload: Payload) -> int:
        lk = self.get(name)
        lk.history.append(payload)
        return len(lk.history) - 1

    def pending(self, name: str, mark: int) -> list[Payload]:
        return self.get(name).history[mark:]

    def tail(self, name: str) -> int:
        return len(self.get(name).history)


# -- reductions ---------------------------------------------------------------

_OPS = {
    "sum": lambda a, b: a + b,
    "max": max,
    "min": min,
}
_FMT = {"f8": "<d", "i8": "<q"}


@dataclass
class ReductionVar:
    addr: int
    op: str
    kind: str = "f8"
    contributions: dict[int, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.op not in _OPS:
            raise UsageError(f"unknown reduction op {self.op!r}")
        if self.kind not in _FMT:
            raise UsageError(f"unknown reduction element kind {self.kind!r}")

    def contribute(self, pid: int, value) -> None:
        if pid in self.contributions:
            raise UsageError(f"processor {pid} contributed twice to reduction at {self.addr}")
        self.contributions[pid] = float(value) if self.kind == "f8" else int(value)

    def combine(self):
        """Fold contributions in ascending processor order."""
        fn = _OPS[self.op]
        acc = None
        for pid in sorted(self.contributions):
            v = self.contributions[pid]
            acc = v if acc is None else fn(acc, v)
        return acc

    def encode(self, value) -> bytes:
        return struct.pack(_FMT[self.kind], value)


@dataclass
class Episode:
    barrier: str
    index: int
    participants: frozenset[int]
    arrived: dict[int, float] = field(default_factory=dict)
    departed: set[int] = field(default_factory=set)
    reductions: dict[int, ReductionVar] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return len(self.arrived) == len(self.participants)


class BarrierManager:
    def __init__(self):
        self.current: dict[str, Episode] = {}
        self.count: dict[str, int] = {}
        # contributions made before anyone arrived at the next episode
        self.staged: dict[str, dict[int, ReductionVar]] = {}

    def open_episode(self, name: str, participants) -> Episode:
        ep = self.current.get(name)
        if ep is None or ep.complete:
            idx = self.count.get(name, 0)
            self.count[name] = idx + 1
            ep = self.current[name] = Episode(name, idx, frozenset(participants))
            ep.reductions = self.staged.pop(name, {})
        return ep

    def arrive(self, pid: int, name: str, participants, clock: float) -> Episode:
        ep = self.open_episode(name, participants)
        if participants is not None and frozenset(participants) != ep.participants:
            raise UsageError(f"barrier {name!r}: participant set changed within an episode")
        if pid not in ep.participants:
            raise UsageError(f"processor {pid} is not a participant of barrier {name!r}")
        if pid in ep.arrived:
            raise UsageError(f"processor {pid} arrived twice at barrier {name!r}")
        ep.arrived[pid] = clock
        return ep

    def contribute(self, pid: int, name: str, addr: int, op: str, kind: str, value) -> None:
        ep = self.current.get(name)
        if ep is not None and not ep.complete:
            if pid not in ep.participants:
                raise UsageError(f"processor {pid} is not a participant of barrier {name!r}")
            table = ep.reductions
        else:
            table = self.staged.setdefault(name, {})
        var = table.get(addr)
        if var is None:
            var = table[addr] = ReductionVar(addr, op, kind)
        elif (var.op, var.kind) != (op, kind):
            raise UsageError(f"reduction at {addr} used with inconsistent op/kind")
        var.contribute(pid, value)
