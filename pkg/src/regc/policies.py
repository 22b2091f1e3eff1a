"""Update payloads for the two coherence policies and their wire sizes.

``PAGE`` invalidates whole pages for both region kinds. ``FINEGRAIN`` ships
the exact (address, bytes) writes of a consistency-region span and keeps page
invalidation for ordinary regions.

Serialized sizes are only used for byte accounting:

    DiffLog          24 + sum(len(entry) + 16)
    InvalidationSet  24 + 8 * pages
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

HEADER_BYTES = 24
DIFF_ENTRY_HEADER = 16
PAGE_ID_BYTES = 8


class PolicyKind(enum.Enum):
    PAGE = "page"
    FINEGRAIN = "finegrain"

    @classmethod
    def parse(cls, value: "str | PolicyKind") -> "PolicyKind":
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().lower())


@dataclass(frozen=True)
class OrdinaryFlush:
    processor: int
    seq: int


@dataclass(frozen=True)
class ConsistencySpan:
    lock: str
    index: int  # position in the lock's payload history
    start_seq: int = 0


@dataclass
class DiffEntry:
    addr: int
    data: bytes
    stamp: int = 0  # engine tick at which the write reached the server

    @property
    def length(self) -> int:
        return len(self.data)


@dataclass
class DiffLog:
    entries: list[DiffEntry] = field(default_factory=list)
    origin: ConsistencySpan | None = None

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class InvalidationSet:
    pages: frozenset[int] = frozenset()
    origin: OrdinaryFlush | ConsistencySpan | None = None

    def __bool__(self) -> bool:
        return bool(self.pages)

    def __len__(self) -> int:
        return len(self.pages)


Payload = DiffLog | InvalidationSet


def payload_bytes(payload: Payload | None) -> int:
    if payload is None:
        return 0
    if isinstance(payload, DiffLog):
        return HEADER_BYTES + sum(e.length + DIFF_ENTRY_HEADER for e in payload.entries)
    return HEADER_BYTES + PAGE_ID_BYTES * len(payload.pages)


def merge_payloads(payloads, policy: PolicyKind) -> Payload:
    """Combine pending per-lock payloads: diff logs concatenate in release
    order, invalidation sets union."""
    if policy is PolicyKind.FINEGRAIN:
        out = DiffLog()
        for p in payloads:
            out.entries.extend(p.entries)
        return out
    pages: set[int] = set()
    for p in payloads:
        pages |= p.pages
    return InvalidationSet(frozenset(pages))


def empty_payload(policy: PolicyKind) -> Payload:
    return DiffLog() if policy is PolicyKind.FINEGRAIN else InvalidationSet()


# -- protocol hooks -----------------------------------------------------------


def write_through(sim, proc, entries) -> list:
    """Patch the authoritative server copy with span writes; stamps each entry."""
    out = []
    for e in entries:
        sim.space.server_patch(e.addr, e.data)
        e.stamp = sim.tick()
        out.append(e)
    return out


def publish_open_spans(sim, proc) -> set[int]:
    """Write through the not-yet-published stores of every open span.

    Used at a nested acquire so stores of the enclosing spans are on the
    servers before anything ordered after that acquire can need them."""
    pages: set[int] = set()
    ps = sim.space.page_size
    for span in proc.open_spans:
        fresh = span.write_log[span.published:]
        if fresh:
            write_through(sim, proc, fresh)
            span.published = len(span.write_log)
            pages.update(e.addr // ps for e in fresh)
            n = payload_bytes(DiffLog(fresh))
            sim.send(proc, "DiffWrite", n)
            sim.metrics.consistency_bytes += n
    return pages


def on_release(sim, proc, span) -> Payload:
    """Close ``span`` and build the payload later acquirers of its lock need."""
    span.closed = True
    if sim.policy is PolicyKind.FINEGRAIN:
        fresh = span.write_log[span.published:]
        if fresh:
            write_through(sim, proc, fresh)
            span.published = len(span.write_log)
            n = payload_bytes(DiffLog(fresh))
            sim.send(proc, "DiffWrite", n)
            sim.metrics.consistency_bytes += n
        return DiffLog(list(span.write_log))
    for page in sorted(span.touched):
        e = proc.cache.peek(page)
        if e is not None and e.is_dirty:
            proc._writeback(sim, page, e)
            sim.metrics.consistency_bytes += sim.space.page_size + HEADER_BYTES
    return InvalidationSet(frozenset(span.touched))


def on_acquire_payload_apply(sim, proc, payload: Payload) -> None:
    if isinstance(payload, DiffLog):
        proc.apply_diffs(sim, payload)
    else:
        proc.apply_invalidations(sim, payload.pages)
