"""Global shared address space: pages, allocation and memory servers.

Pages are striped round-robin over the memory servers by page index.
Servers hold pages lazily; a page that was never written reads as zeros.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfBoundsError, OutOfSpaceError, UsageError

WORD = 8


@dataclass(frozen=True)
class Allocation:
    base: int
    length: int

    @property
    def end(self) -> int:
        return self.base + self.length

    def __contains__(self, addr: int) -> bool:
        return self.base <= addr < self.end


def page_of(addr: int, page_size: int, total_size: int | None = None) -> int:
    if addr < 0 or (total_size is not None and addr >= total_size):
        raise OutOfBoundsError(f"address {addr} outside the global address space")
    return addr // page_size


def server_of(page: int, server_count: int) -> int:
    if server_count < 1:
        raise UsageError("server_count must be >= 1")
    return page % server_count


@dataclass
class MemoryServer:
    """Authoritative storage for the pages with ``page % server_count == id``."""

    id: int
    page_size: int
    store: dict[int, np.ndarray] = field(default_factory=dict)

    def read(self, page: int) -> np.ndarray:
        data = self.store.get(page)
        if data is None:
            return np.zeros(self.page_size, dtype=np.uint8)
        return data.copy()

    def write(self, page: int, data: np.ndarray, mask: np.ndarray | None = None) -> None:
        # whole-message granularity: the update lands in one assignment
        if mask is None:
            self.store[page] = np.array(data, dtype=np.uint8, copy=True)
            return
        cur = self.store.get(page)
        if cur is None:
            cur = self.store[page] = np.zeros(self.page_size, dtype=np.uint8)
        cur[mask] = data[mask]

    def patch(self, page: int, offset: int, data: bytes) -> None:
        cur = self.store.get(page)
        if cur is None:
            cur = self.store[page] = np.zeros(self.page_size, dtype=np.uint8)
        cur[offset:offset + len(data)] = np.frombuffer(data, dtype=np.uint8)


class AddressSpace:
    """Page-aligned bump allocator over a set of memory servers.

    Allocation metadata is private to the resource manager; it never lives in
    shared memory.
    """

    def __init__(self, total_size: int = 16 << 20, page_size: int = 4096, server_count: int = 1):
        if page_size <= 0 or total_size <= 0:
            raise UsageError("sizes must be positive")
        if total_size % page_size:
            raise UsageError("total_size must be a multiple of page_size")
        self.total_size = total_size
        self.page_size = page_size
        self.server_count = server_count
        self.servers = [MemoryServer(i, page_size) for i in range(server_count)]
        self.allocations: list[Allocation] = []
        self._bases: list[int] = []
        self._next = 0

    @property
    def page_count(self) -> int:
        return self.total_size // self.page_size

    @property
    def high_water(self) -> int:
        """End of the last page handed out so far."""
        return self._next

    def alloc(self, length: int) -> Allocation:
        if length <= 0:
            raise UsageError("allocation length must be positive")
        pages = -(-length // self.page_size)
        base = self._next
        if base + pages * self.page_size > self.total_size:
            raise OutOfSpaceError(f"cannot allocate {length} bytes: address space exhausted")
        self._next = base + pages * self.page_size
        a = Allocation(base, length)
        self.allocations.append(a)
        self._bases.append(base)
        return a

    def allocation_at(self, addr: int) -> Allocation | None:
        i = bisect.bisect_right(self._bases, addr) - 1
        if i >= 0 and addr in self.allocations[i]:
            return self.allocations[i]
        return None

    def check_access(self, addr: int, length: int) -> int:
        """Validate a load/store range and return its page id."""
        if length < 1 or length > self.page_size:
            raise UsageError(f"access length {length} outside 1..page_size")
        page = page_of(addr, self.page_size, self.total_size)
        a = self.allocation_at(addr)
        if a is None or addr + length > a.end:
            raise OutOfBoundsError(f"access [{addr}, {addr + length}) not inside one allocation")
        if (addr + length - 1) // self.page_size != page:
            raise UsageError(f"access [{addr}, {addr + length}) crosses a page boundary")
        return page

    def page_of(self, addr: int) -> int:
        return page_of(addr, self.page_size, self.total_size)

    def server_of(self, page: int) -> int:
        return server_of(page, self.server_count)

    def server_for(self, page: int) -> MemoryServer:
        return self.servers[page % self.server_count]

    def server_read(self, page: int) -> np.ndarray:
        if not 0 <= page < self.page_count:
            raise OutOfBoundsError(f"page {page} out of range")
        return self.server_for(page).read(page)

    def server_write(self, page: int, data, mask=None) -> None:
        if not 0 <= page < self.page_count:
            raise OutOfBoundsError(f"page {page} out of range")
        self.server_for(page).write(page, np.asarray(data, dtype=np.uint8), mask)

    def server_patch(self, addr: int, data: bytes) -> None:
        page = addr // self.page_size
        self.server_for(page).patch(page, addr - page * self.page_size, data)

    def snapshot(self, end: int | None = None) -> bytes:
        """Authoritative contents of [0, end) straight from the servers."""
        end = self.high_water if end is None else end
        out = bytearray(end)
        for page in range(-(-end // self.page_size)):
            data = self.server_for(page).store.get(page)
            if data is None:
                continue
            lo = page * self.page_size
            hi = min(end, lo + self.page_size)
            out[lo:hi] = data[:hi - lo].tobytes()
        return bytes(out)
