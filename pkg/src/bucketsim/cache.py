"""Per-node FIFO sample cache with hit/miss/eviction accounting.

Eviction removes the oldest-inserted entry first. A hit does not refresh an
entry's position (FIFO, not LRU), and re-inserting a resident key is a
position-preserving no-op so a pre-fetcher and a worker can both insert the
same sample without corrupting occupancy. Entries persist across epochs;
``reset_epoch_stats`` zeroes only the counters.

Safe for one training-loop consumer plus one pre-fetch inserter: every
operation holds a lock, so get/put and their stats updates are atomic.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Optional

from .core import SampleKey, SampleRecord


@dataclass(frozen=True)
class CacheStats:
    """Counter snapshot. hits + misses equals lookups since the last reset."""

    hits: int
    misses: int
    evictions: int
    occupancy: int

    @property
    def lookups(self) -> int:
        return self.hits + self.misses

    @property
    def miss_rate(self) -> float:
        """Fraction of lookups not served by the cache (0.0 when idle)."""
        total = self.hits + self.misses
        return self.misses / total if total else 0.0


class FifoCache:
    """Capacity-capped, insertion-ordered sample cache.

    ``capacity`` is a sample count; 0 disables the cache entirely (every get
    misses, every put is a no-op) which is how the no-cache baselines are
    wired.
    """

    def __init__(self, capacity: int) -> None:
        if capacity < 0:
            raise ValueError("capacity >= 0 required")
        self.capacity = capacity
        self._entries: dict[SampleKey, bytes] = {}
        self._lock = threading.Lock()
        self._hits = 0
        self._misses = 0
        self._evictions = 0

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def occupancy(self) -> int:
        return len(self._entries)

    def get(self, key: SampleKey) -> Optional[bytes]:
        """Return the payload if resident, else None. Order is unchanged."""
        with self._lock:
            payload = self._entries.get(key)
            if payload is None:
                self._misses += 1
            else:
                self._hits += 1
            return payload

    def put(self, record: SampleRecord) -> list[SampleKey]:
        """Insert a record, evicting oldest entries past capacity.

        Returns the evicted keys (at most one per new insertion). Duplicate
        puts of a resident key change nothing.
        """
        if self.capacity == 0:
            return []
        with self._lock:
            entries = self._entries
            if record.key in entries:
                return []
            entries[record.key] = record.payload
            evicted: list[SampleKey] = []
            while len(entries) > self.capacity:
                oldest = next(iter(entries))
                del entries[oldest]
                evicted.append(oldest)
            self._evictions += len(evicted)
            return evicted

    def stats(self) -> CacheStats:
        """Current counters without resetting them."""
        with self._lock:
            return CacheStats(
                self._hits, self._misses, self._evictions, len(self._entries)
            )

    def reset_epoch_stats(self) -> CacheStats:
        """Snapshot the epoch's counters and zero them; entries are kept."""
        with self._lock:
            snap = CacheStats(
                self._hits, self._misses, self._evictions, len(self._entries)
            )
            self._hits = 0
            self._misses = 0
            self._evictions = 0
            return snap
