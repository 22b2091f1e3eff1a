"""Per-run counters. All fields only grow during a run."""
from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass, field


@dataclass
class SimMetrics:
    page_fetches: int = 0
    page_writebacks: int = 0
    invalidations_applied: int = 0
    diff_entries_applied: int = 0
    lock_messages: int = 0
    barrier_messages: int = 0
    bytes_on_wire: int = 0
    instrumented_stores: int = 0
    simulated_time: float = 0.0
    cache_hits: int = 0
    prefetches: int = 0
    bytes_flushed: int = 0
    # bytes moved to propagate consistency-region updates: release-side
    # write-back/write-through plus the rule-2 payload carried by grants
    consistency_bytes: int = 0
    messages: Counter = field(default_factory=Counter, repr=False, compare=False)
    message_bytes: Counter = field(default_factory=Counter, repr=False, compare=False)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls) if f.name not in ("messages", "message_bytes")]

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.field_names()}
