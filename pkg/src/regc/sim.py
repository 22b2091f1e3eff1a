"""The simulator: processors, resource manager and memory servers on one
deterministic event loop.

Scheduling points are the synchronization operations (acquire, the grant
of a contended acquire, release, barrier arrival and departure, fork, join,
yield) plus the start of every thread. Loads and stores run to the next scheduling
point without preemption, so the schedule chosen for a seed does not depend
on the coherence policy or on cache behaviour.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any

from . import trace as tr
from .address_space import AddressSpace, Allocation
from .config import SimConfig
from .errors import DeadlockError, UsageError
from .metrics import SimMetrics
from .policies import (
    HEADER_BYTES,
    ConsistencySpan,
    DiffLog,
    InvalidationSet,
    OrdinaryFlush,
    PolicyKind,
    merge_payloads,
    on_acquire_payload_apply,
    on_release,
    payload_bytes,
    publish_open_spans,
)
from .runtime import (
    DONE,
    READY,
    WAIT_BARRIER,
    WAIT_JOIN,
    WAIT_LOCK,
    Acquire,
    Barrier,
    Ctx,
    Fork,
    Join,
    Load,
    Processor,
    Reduce,
    Release,
    Span,
    Store,
    Yield,
)
from .scheduler import RandomScheduler, Scheduler
from .sync import BarrierManager, GlobalConsistencyLog, LockManager


@dataclass
class RunResult:
    metrics: SimMetrics
    events: list[tr.Event]
    results: dict[int, Any]
    memory: bytes
    steps: int = 0
    schedule: list[int] = field(default_factory=list)

    def trace_text(self) -> str:
        return tr.dump_trace(self.events)


class Simulator:
    def __init__(self, config: SimConfig | None = None, scheduler: Scheduler | None = None):
        self.config = config or SimConfig()
        self.policy = self.config.policy
        self.cost = self.config.cost
        self.mutant = self.config.mutant
        self.scheduler = scheduler or RandomScheduler(0)
        self.space = AddressSpace(self.config.total_size_bytes, self.config.page_size_bytes,
                                  self.config.server_count)
        self.log = GlobalConsistencyLog()
        self.locks = LockManager()
        self.barriers = BarrierManager()
        self.metrics = SimMetrics()
        self.fetch_counts: Counter = Counter()
        self.events: list[tr.Event] = []
        self.procs: list[Processor] = []
        self._tick = 0
        self._steps = 0
        self._schedule: list[int] = []

    # -- plumbing -------------------------------------------------------------

    def tick(self) -> int:
        self._tick += 1
        return self._tick

    def emit(self, pid: int, kind: str, **kw) -> None:
        if self.config.record_trace:
            self.events.append(tr.Event(len(self.events), pid, kind, **kw))

    def send(self, proc: Processor, kind: str, nbytes: int) -> None:
        self.metrics.bytes_on_wire += nbytes
        self.metrics.messages[kind] += 1
        self.metrics.message_bytes[kind] += nbytes
        proc.clock += self.cost.message(nbytes)

    def alloc(self, length: int) -> Allocation:
        return self.space.alloc(length)

    def spawn(self, body, arg=None, parent: int | None = None) -> int:
        pid = len(self.procs)
        gen = body(Ctx(pid, self.space.page_size), arg)
        p = Processor(pid, gen, self.config.cache_capacity_pages, parent)
        # an empty cache has nothing stale; start at the current tails
        p.watermark = self.log.tail
        p.lock_marks = {name: self.locks.tail(name) for name in self.locks.locks}
        self.procs.append(p)
        return pid

    def live(self) -> frozenset[int]:
        return frozenset(p.pid for p in self.procs if p.state != DONE)

    def read_memory(self, addr: int, length: int) -> bytes:
        return self.space.snapshot(addr + length)[addr:addr + length]

    # -- main loop ------------------------------------------------------------

    def runnable(self) -> list[int]:
        out = []
        for p in self.procs:
            st = p.state
            if st == READY:
                ok = True
            elif st == WAIT_LOCK:
                ok = self.locks.grantable(p.pid, p.wait_lock)
            elif st == WAIT_BARRIER:
                ok = p.wait_barrier.complete
            elif st == WAIT_JOIN:
                ok = self.procs[p.wait_child].state == DONE
            else:
                ok = False
            if ok:
                out.append(p.pid)
        return out

    def run(self) -> RunResult:
        while True:
            ready = self.runnable()
            if not ready:
                waiting = [p.pid for p in self.procs if p.state != DONE]
                if waiting:
                    raise DeadlockError(f"processors {waiting} blocked with nothing runnable")
                break
            pid = self.scheduler.choose(ready)
            self._schedule.append(pid)
            self._steps += 1
            self.step(self.procs[pid])
        self.metrics.simulated_time = max((p.clock for p in self.procs), default=0.0)
        return RunResult(
            metrics=self.metrics,
            events=self.events,
            results={p.pid: p.result for p in self.procs},
            memory=self.space.snapshot(),
            steps=self._steps,
            schedule=list(self._schedule),
        )

    def step(self, p: Processor) -> None:
        if not p.started:
            p.started = True
            self._advance(p, None, first=True)
            return
        if p.state == WAIT_LOCK:
            result = self._grant(p)
        elif p.state == WAIT_BARRIER:
            result = self._depart(p)
        elif p.state == WAIT_JOIN:
            result = self._complete_join(p)
        else:
            result = self._exec_sync(p, p.pending)
            if p.state == WAIT_LOCK and self.locks.grantable(p.pid, p.wait_lock):
                # uncontended: the grant follows the request without a
                # scheduling point in between
                result = self._grant(p)
            elif p.state != READY:
                return
        self._advance(p, result)

    def _advance(self, p: Processor, result, first: bool = False) -> None:
        gen = p.gen
        while True:
            try:
                op = next(gen) if first else gen.send(result)
            except StopIteration as stop:
                p.result = stop.value
                self._exit(p)
                return
            first = False
            if isinstance(op, Load):
                result = p.load(self, op.addr, op.length)
            elif isinstance(op, Store):
                p.store(self, op.addr, op.data)
                result = None
            elif isinstance(op, Reduce):
                self._contribute(p, op)
                result = None
            elif isinstance(op, (Acquire, Release, Barrier, Fork, Join, Yield)):
                p.pending = op
                return
            else:
                raise UsageError(f"processor {p.pid} yielded a non-operation: {op!r}")

    def _exec_sync(self, p: Processor, op):
        if isinstance(op, Acquire):
            return self._request(p, op.lock)
        if isinstance(op, Release):
            return self._release(p, op.lock)
        if isinstance(op, Barrier):
            return self._arrive(p, op)
        if isinstance(op, Fork):
            return self._fork(p, op)
        if isinstance(op, Join):
            return self._join(p, op)
        return None  # Yield

    # -- publication helpers --------------------------------------------------

    def _publish(self, p: Processor, pages) -> int | None:
        if not pages:
            return None
        inv = InvalidationSet(frozenset(pages), OrdinaryFlush(p.pid, self.log.tail + 1))
        seq = self.log.append(inv)
        self.send(p, "FlushPublish", payload_bytes(inv))
        return seq

    def _skip(self, p: Processor, inv: InvalidationSet, acquiring: str | None) -> bool:
        o = inv.origin
        if isinstance(o, OrdinaryFlush):
            return o.processor == p.pid
        if isinstance(o, ConsistencySpan):
            # the span's own payload reaches p through its lock instead
            return o.lock == acquiring or o.index < p.lock_marks.get(o.lock, 0)
        return False

    def _apply_log(self, p: Processor, acquiring: str | None) -> int:
        delivered = 0
        for entry in self.log.after(p.watermark):
            if self._skip(p, entry.inv, acquiring):
                continue
            p.apply_invalidations(self, entry.inv.pages)
            delivered += payload_bytes(entry.inv)
        p.watermark = self.log.tail
        return delivered

    def _catch_up(self, p: Processor) -> int:
        """Apply every pending lock payload and the whole log (barrier, join)."""
        nbytes = 0
        pending = []
        for name in sorted(self.locks.locks):
            mark = p.lock_marks.get(name, 0)
            pending.extend(self.locks.pending(name, mark))
            p.lock_marks[name] = self.locks.tail(name)
        if pending:
            merged = merge_payloads(pending, self.policy)
            if isinstance(merged, DiffLog):
                merged.entries.sort(key=lambda e: e.stamp)
            on_acquire_payload_apply(self, p, merged)
            nbytes += payload_bytes(merged)
        nbytes += self._apply_log(p, None)
        return nbytes

    # -- locks ----------------------------------------------------------------

    def _request(self, p: Processor, m: str):
        if p.holds(m):
            raise UsageError(f"processor {p.pid} re-acquires lock {m!r}")
        nested = bool(p.open_spans)
        pages = set(p.flush_ordinary(self).pages)
        if nested and self.policy is PolicyKind.FINEGRAIN:
            pages |= publish_open_spans(self, p)
        seq = self._publish(p, pages)
        self.emit(p.pid, tr.FLUSH, lock=m, log_seq=seq)
        self.locks.request(p.pid, m)
        self.send(p, "AcquireReq", HEADER_BYTES)
        self.metrics.lock_messages += 1
        p.state = WAIT_LOCK
        p.wait_lock = m
        return None

    def _grant(self, p: Processor):
        m = p.wait_lock
        lk = self.locks.get(m)
        aseq = self.locks.grant(p.pid, m)
        # rule 1: every ordinary flush published so far
        if self.mutant == "drop_rule1":
            r1 = 0
            p.watermark = self.log.tail
        else:
            r1 = self._apply_log(p, m)
        assert p.watermark == self.log.tail
        # rule 2: updates from earlier spans of this lock
        pend = self.locks.pending(m, p.lock_marks.get(m, 0))
        r2 = 0
        if pend:
            payload = merge_payloads(pend, self.policy)
            if self.mutant != "drop_rule2":
                on_acquire_payload_apply(self, p, payload)
            r2 = payload_bytes(payload)
            self.metrics.consistency_bytes += r2
        p.lock_marks[m] = self.locks.tail(m)
        p.clock = max(p.clock, lk.release_clock)
        self.send(p, "AcquireGrant", HEADER_BYTES + r1 + r2)
        p.open_spans.append(Span(m, p.pid, aseq))
        self.emit(p.pid, tr.ACQUIRE, lock=m, aseq=aseq)
        p.state = READY
        p.wait_lock = None
        return None

    def _release(self, p: Processor, m: str):
        if not p.open_spans or p.open_spans[-1].lock != m:
            if p.holds(m):
                raise UsageError(f"processor {p.pid} releases {m!r} out of nesting order")
            raise UsageError(f"processor {p.pid} releases lock {m!r} it does not hold")
        span = p.open_spans.pop()
        payload = on_release(self, p, span)
        lk = self.locks.release(p.pid, m, p.clock)
        nbytes = HEADER_BYTES
        if payload:
            idx = self.locks.record(m, payload)
            ps = self.space.page_size
            pages = ({e.addr // ps for e in payload.entries} if isinstance(payload, DiffLog)
                     else set(payload.pages))
            self.log.append(InvalidationSet(frozenset(pages), ConsistencySpan(m, idx, span.start_seq)))
            nbytes += payload_bytes(payload)
        p.lock_marks[m] = self.locks.tail(m)
        self.send(p, "ReleaseNotify", nbytes)
        self.metrics.lock_messages += 1
        lk.release_clock = p.clock
        self.emit(p.pid, tr.RELEASE, lock=m, aseq=span.start_seq)
        return None

    # -- barriers and reductions ---------------------------------------------

    def _participants(self, name: str, explicit) -> frozenset[int]:
        ep = self.barriers.current.get(name)
        if ep is not None and not ep.complete:
            return ep.participants
        return frozenset(explicit) if explicit is not None else self.live()

    def _contribute(self, p: Processor, op: Reduce) -> None:
        self.barriers.contribute(p.pid, op.barrier, op.addr, op.op, op.kind, op.value)

    def _arrive(self, p: Processor, op: Barrier):
        if p.open_spans:
            raise UsageError(f"processor {p.pid} enters barrier {op.barrier!r} while holding a lock")
        parts = self._participants(op.barrier, op.participants)
        if op.participants is not None and frozenset(op.participants) != parts:
            raise UsageError(f"barrier {op.barrier!r}: participant set changed within an episode")
        ep = self.barriers.arrive(p.pid, op.barrier, parts, p.clock)
        if ep.complete:
            # last arriver writes the combined reductions before publishing
            for addr in sorted(ep.reductions):
                var = ep.reductions[addr]
                value = var.combine()
                if value is not None:
                    p.store(self, addr, var.encode(value))
        if self.mutant != "drop_rule3":
            self._publish(p, p.flush_ordinary(self).pages)
        ep.arrived[p.pid] = p.clock
        self.emit(p.pid, tr.BARRIER_ARRIVE, barrier=op.barrier, episode=ep.index,
                  parties=tuple(sorted(ep.participants)))
        self.send(p, "BarrierArrive", HEADER_BYTES)
        self.metrics.barrier_messages += 1
        p.state = WAIT_BARRIER
        p.wait_barrier = ep
        return None

    def _depart(self, p: Processor):
        ep = p.wait_barrier
        nbytes = self._catch_up(p)
        p.clock = max(p.clock, max(ep.arrived.values()))
        self.send(p, "BarrierRelease", HEADER_BYTES + nbytes)
        self.metrics.barrier_messages += 1
        ep.departed.add(p.pid)
        self.emit(p.pid, tr.BARRIER_DEPART, barrier=ep.barrier, episode=ep.index,
                  parties=tuple(sorted(ep.participants)))
        p.state = READY
        p.wait_barrier = None
        return None

    # -- fork / join / exit ---------------------------------------------------

    def _fork(self, p: Processor, op: Fork) -> int:
        if p.open_spans:
            raise UsageError(f"processor {p.pid} forks while holding a lock")
        self._publish(p, p.flush_ordinary(self).pages)
        child = self.spawn(op.body, op.arg, parent=p.pid)
        self.procs[child].clock = p.clock + self.cost.latency_ns
        self.emit(p.pid, tr.FORK, other=child)
        return child

    def _join(self, p: Processor, op: Join):
        pid = op.pid
        if not (0 <= pid < len(self.procs)) or self.procs[pid].parent is None:
            raise UsageError(f"join on unknown thread {pid}")
        child = self.procs[pid]
        if child.joined:
            raise UsageError(f"thread {pid} already joined")
        if pid == p.pid:
            raise UsageError("a thread cannot join itself")
        child.joined = True
        p.state = WAIT_JOIN
        p.wait_child = pid
        return None

    def _complete_join(self, p: Processor):
        child = self.procs[p.wait_child]
        self._catch_up(p)
        p.clock = max(p.clock, child.clock) + self.cost.latency_ns
        self.emit(p.pid, tr.JOIN, other=child.pid)
        p.state = READY
        p.wait_child = None
        return child.result

    def _exit(self, p: Processor) -> None:
        if p.open_spans:
            raise UsageError(f"processor {p.pid} terminated holding lock {p.open_spans[-1].lock!r}")
        self._publish(p, p.flush_ordinary(self).pages)
        self.emit(p.pid, tr.EXIT)
        p.state = DONE
        p.pending = None
