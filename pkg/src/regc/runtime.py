"""Per-processor runtime: program-facing operations, the page cache and
region/span tracking.

Thread bodies are generator functions ``body(ctx, arg)`` that yield the
operation objects below and receive each operation's result back::

    def worker(ctx, counter):
        yield ctx.lock("m")
        raw = yield ctx.load(counter, 8)
        yield ctx.store(counter, (int.from_bytes(raw, "little") + 1).to_bytes(8, "little"))
        yield ctx.unlock("m")

Loads, stores and reductions execute without giving up the processor; all
other operations are scheduling points.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .policies import HEADER_BYTES, DiffEntry, DiffLog, InvalidationSet, OrdinaryFlush, PolicyKind
from . import trace as tr

# -- operations ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Load:
    addr: int
    length: int


@dataclass(frozen=True, slots=True)
class Store:
    addr: int
    data: bytes


@dataclass(frozen=True, slots=True)
class Reduce:
    addr: int
    op: str
    value: Any
    barrier: str
    kind: str = "f8"


@dataclass(frozen=True, slots=True)
class Acquire:
    lock: str


@dataclass(frozen=True, slots=True)
class Release:
    lock: str


@dataclass(frozen=True, slots=True)
class Barrier:
    barrier: str
    participants: frozenset[int] | None = None


@dataclass(frozen=True, slots=True)
class Fork:
    body: Callable
    arg: Any = None


@dataclass(frozen=True, slots=True)
class Join:
    pid: int


@dataclass(frozen=True, slots=True)
class Yield:
    pass


PLAIN_OPS = (Load, Store, Reduce)


class Ctx:
    """Handle passed to a thread body; builds operations and typed helpers."""

    def __init__(self, pid: int, page_size: int):
        self.pid = pid
        self.page_size = page_size

    def load(self, addr: int, length: int) -> Load:
        return Load(addr, length)

    def store(self, addr: int, data: bytes) -> Store:
        return Store(addr, bytes(data))

    def lock(self, m) -> Acquire:
        return Acquire(str(m))

    def unlock(self, m) -> Release:
        return Release(str(m))

    def barrier(self, b="b", participants=None) -> Barrier:
        return Barrier(str(b), None if participants is None else frozenset(participants))

    def fork(self, body, arg=None) -> Fork:
        return Fork(body, arg)

    def join(self, pid: int) -> Join:
        return Join(pid)

    def reduce(self, addr: int, op: str, value, barrier="b", kind: str = "f8") -> Reduce:
        return Reduce(addr, op, value, str(barrier), kind)

    def yield_(self) -> Yield:
        return Yield()

    # page-splitting helpers; use with ``yield from``

    def read_bytes(self, addr: int, length: int):
        out = bytearray()
        while length > 0:
            n = min(length, self.page_size - addr % self.page_size)
            out += yield Load(addr, n)
            addr += n
            length -= n
        return bytes(out)

    def write_bytes(self, addr: int, data: bytes):
        data = bytes(data)
        pos = 0
        while pos < len(data):
            n = min(len(data) - pos, self.page_size - (addr + pos) % self.page_size)
            yield Store(addr + pos, data[pos:pos + n])
            pos += n

    def read_f64(self, addr: int, count: int):
        raw = yield from self.read_bytes(addr, 8 * count)
        return np.frombuffer(raw, dtype="<f8").copy()

    def write_f64(self, addr: int, values):
        yield from self.write_bytes(addr, np.asarray(values, dtype="<f8").tobytes())

    def read_i64(self, addr: int):
        raw = yield Load(addr, 8)
        return int.from_bytes(raw, "little", signed=True)

    def write_i64(self, addr: int, value: int):
        yield Store(addr, int(value).to_bytes(8, "little", signed=True))


# -- cache and spans ----------------------------------------------------------


class CacheEntry:
    __slots__ = ("data", "dirty", "stamp", "bstamp")

    def __init__(self, data: np.ndarray, stamp: int, track_bytes: bool):
        self.data = data
        self.dirty: np.ndarray | None = None  # mask of ordinary-written bytes
        self.stamp = stamp
        # per-byte freshness, so an older diff never overwrites newer bytes
        self.bstamp = np.full(len(data), stamp, dtype=np.int64) if track_bytes else None

    @property
    def is_dirty(self) -> bool:
        return self.dirty is not None


class PageCache:
    """LRU cache of page copies, ``capacity`` pages."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._entries: OrderedDict[int, CacheEntry] = OrderedDict()

    def __contains__(self, page: int) -> bool:
        return page in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, page: int) -> CacheEntry | None:
        e = self._entries.get(page)
        if e is not None:
            self._entries.move_to_end(page)
        return e

    def peek(self, page: int) -> CacheEntry | None:
        return self._entries.get(page)

    def insert(self, page: int, entry: CacheEntry):
        """Insert as most recently used; returns the evicted (page, entry) or None."""
        victim = None
        if page not in self._entries and len(self._entries) >= self.capacity:
            victim = self._entries.popitem(last=False)
        self._entries[page] = entry
        self._entries.move_to_end(page)
        return victim

    def pop(self, page: int) -> CacheEntry | None:
        return self._entries.pop(page, None)

    def pages(self) -> list[int]:
        return list(self._entries)

    def items(self):
        return list(self._entries.items())


@dataclass
class Span:
    lock: str
    processor: int
    start_seq: int
    write_log: list[DiffEntry] = field(default_factory=list)
    touched: set[int] = field(default_factory=set)
    published: int = 0  # write_log prefix already written through
    closed: bool = False


READY, WAIT_LOCK, WAIT_BARRIER, WAIT_JOIN, DONE = "ready", "lock", "barrier", "join", "done"


class Processor:
    """One simulated compute thread with its local cache and region state."""

    def __init__(self, pid: int, gen, cache_capacity: int, parent: int | None = None):
        self.pid = pid
        self.gen = gen
        self.parent = parent
        self.cache = PageCache(cache_capacity)
        self.open_spans: list[Span] = []
        self.state = READY
        self.started = False
        self.pending = None
        self.watermark = 0
        self.lock_marks: dict[str, int] = {}
        self.pending_publish: set[int] = set()
        self.clock = 0.0
        self.result = None
        self.joined = False
        self.wait_lock: str | None = None
        self.wait_barrier = None
        self.wait_child: int | None = None

    @property
    def mode(self) -> str:
        return "consistency" if self.open_spans else "ordinary"

    def holds(self, lock: str) -> bool:
        return any(s.lock == lock for s in self.open_spans)

    # -- cache miss path ------------------------------------------------------

    def _fetch(self, sim, page: int, prefetch: bool = False) -> CacheEntry:
        space = sim.space
        data = space.server_read(page)
        stamp = sim.tick()
        finegrain = sim.policy is PolicyKind.FINEGRAIN
        entry = CacheEntry(data, stamp, finegrain)
        if finegrain:
            # own consistent stores that have not reached the server yet
            ps = space.page_size
            for span in self.open_spans:
                for e in span.write_log[span.published:]:
                    if e.addr // ps == page:
                        off = e.addr - page * ps
                        data[off:off + e.length] = np.frombuffer(e.data, dtype=np.uint8)
                        entry.bstamp[off:off + e.length] = stamp
        sim.send(self, "PageFetch", HEADER_BYTES)
        sim.send(self, "PageData", HEADER_BYTES + space.page_size)
        if prefetch:
            sim.metrics.prefetches += 1
        else:
            sim.metrics.page_fetches += 1
            sim.fetch_counts[page] += 1
        victim = self.cache.insert(page, entry)
        if victim is not None:
            vpage, ventry = victim
            if ventry.is_dirty:
                self._writeback(sim, vpage, ventry)
                self.pending_publish.add(vpage)
        return entry

    def _entry(self, sim, page: int) -> CacheEntry:
        e = self.cache.get(page)
        if e is not None:
            sim.metrics.cache_hits += 1
            self.clock += sim.cost.cache_hit_ns
            return e
        e = self._fetch(sim, page)
        if sim.config.prefetch_enabled and self.cache.capacity > 1:
            nxt = page + 1
            if nxt * sim.space.page_size < sim.space.high_water and nxt not in self.cache:
                self._fetch(sim, nxt, prefetch=True)
                self.cache.get(page)  # demand page back to MRU
        return e

    def _writeback(self, sim, page: int, entry: CacheEntry) -> None:
        sim.space.server_write(page, entry.data, entry.dirty)
        entry.dirty = None
        sim.metrics.page_writebacks += 1
        sim.metrics.bytes_flushed += sim.space.page_size
        sim.send(self, "PageWrite", HEADER_BYTES + sim.space.page_size)

    # -- load / store ---------------------------------------------------------

    def load(self, sim, addr: int, length: int) -> bytes:
        page = sim.space.check_access(addr, length)
        e = self._entry(sim, page)
        off = addr - page * sim.space.page_size
        value = e.data[off:off + length].tobytes()
        sim.emit(self.pid, tr.LOAD, addr=addr, length=length, value=value)
        return value

    def store(self, sim, addr: int, data: bytes) -> None:
        n = len(data)
        page = sim.space.check_access(addr, n)
        e = self._entry(sim, page)
        off = addr - page * sim.space.page_size
        e.data[off:off + n] = np.frombuffer(data, dtype=np.uint8)
        finegrain = sim.policy is PolicyKind.FINEGRAIN
        if e.bstamp is not None:
            e.bstamp[off:off + n] = sim.tick()
        if finegrain:
            # every store goes through the instrumentation hook
            words = -(-n // 8)
            sim.metrics.instrumented_stores += words
            self.clock += sim.cost.instrumented_store_ns * words
        span = self.open_spans[-1] if self.open_spans else None
        if span is not None:
            span.touched.add(page)
            if finegrain:
                span.write_log.append(DiffEntry(addr, bytes(data)))
            else:
                self._mark_dirty(e, off, n)
            sim.emit(self.pid, tr.STORE, addr=addr, length=n, value=bytes(data),
                     tag=tr.CONSISTENT, lock=span.lock, aseq=span.start_seq)
        else:
            self._mark_dirty(e, off, n)
            sim.emit(self.pid, tr.STORE, addr=addr, length=n, value=bytes(data), tag=tr.ORDINARY)

    @staticmethod
    def _mark_dirty(e: CacheEntry, off: int, n: int) -> None:
        if e.dirty is None:
            e.dirty = np.zeros(len(e.data), dtype=bool)
        e.dirty[off:off + n] = True

    # -- coherence actions ----------------------------------------------------

    def flush_ordinary(self, sim) -> InvalidationSet:
        """Write back every dirty page; return the pages other caches must drop.

        Pages written back earlier by eviction are announced here as well."""
        pages = set(self.pending_publish)
        self.pending_publish.clear()
        for page, e in self.cache.items():
            if e.is_dirty:
                self._writeback(sim, page, e)
                pages.add(page)
        return InvalidationSet(frozenset(pages), OrdinaryFlush(self.pid, -1))

    def apply_invalidations(self, sim, pages) -> None:
        for page in sorted(pages):
            e = self.cache.pop(page)
            if e is None:
                continue
            if e.is_dirty:
                self._writeback(sim, page, e)
                self.pending_publish.add(page)
            sim.metrics.invalidations_applied += 1

    def apply_diffs(self, sim, diffs: DiffLog | list[DiffEntry]) -> None:
        entries = diffs.entries if isinstance(diffs, DiffLog) else diffs
        ps = sim.space.page_size
        for d in entries:
            page = d.addr // ps
            e = self.cache.peek(page)
            if e is None:
                continue
            off = d.addr - page * ps
            sl = slice(off, off + d.length)
            newer = e.bstamp[sl] < d.stamp
            if not newer.any():
                continue
            new = np.frombuffer(d.data, dtype=np.uint8)
            e.data[sl][newer] = new[newer]
            e.bstamp[sl][newer] = d.stamp
            sim.metrics.diff_entries_applied += 1
            sim.emit(self.pid, tr.DIFF, addr=d.addr, length=d.length)
