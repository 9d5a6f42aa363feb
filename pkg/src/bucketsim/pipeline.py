"""Sampler, pre-fetch service, and cache-first dataset machinery.

The flow mirrors a modular training-framework data pipeline. A partition
sampler deals each node a fresh random slice of the dataset every epoch. A
pre-fetching sampler wraps the partition's index stream: it emits indices in
the original order but, whenever the count of fetched-but-untrained indices
drops to the pre-fetch threshold, it requests another fetch of ``fetch_size``
indices from the pre-fetch service. The service acknowledges immediately and
does its listing, parallel download, and cache fill off the training path on
the virtual timeline. The cache-first dataset serves each lookup from the
FIFO cache when it can and falls back to the store when it cannot.

On a worker-path miss the sample is, by default, NOT inserted into the cache;
the pre-fetch service will eventually insert it, and double-inserting would
waste time on the training path. The cache-only baseline flips
``insert_on_worker_miss`` on instead of using a separate dataset type.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Optional, Sequence

from .cache import FifoCache
from .core import SampleKey, seeded_rng
from .store import BackingStore, LedgerSnapshot, NotFoundError, RequestLedger


class PartitionSampler:
    """Per-epoch random, evenly-sized, disjoint partitions of [0, m).

    Each epoch draws a fresh uniform permutation shared by all nodes; node i
    takes positions i, i+n, i+2n, ... When n does not divide m the
    permutation is padded by wrapping from its own start so every partition
    has exactly ceil(m / n) indices.
    """

    def __init__(self, num_samples: int, nodes: int, seed: int, label_prefix: str = ""):
        if nodes < 1:
            raise ValueError("nodes >= 1 required")
        self.num_samples = num_samples
        self.nodes = nodes
        self.seed = seed
        self.label_prefix = label_prefix

    def partition(self, epoch: int, node_rank: int) -> list[int]:
        if not 0 <= node_rank < self.nodes:
            raise ValueError(
                f"node_rank {node_rank} out of range for {self.nodes} nodes"
            )
        rng = seeded_rng(self.seed, f"{self.label_prefix}epoch{epoch}/partition")
        perm = rng.permutation(self.num_samples)
        pad = -self.num_samples % self.nodes
        if pad:
            perm = list(perm) + list(perm[:pad])
        return [int(i) for i in perm[node_rank :: self.nodes]]


class IndexStream:
    """Plain index source with the same next_index() surface as the wrapper."""

    __slots__ = ("_indices", "_pos")

    def __init__(self, indices: Sequence[int]):
        self._indices = indices
        self._pos = 0

    def next_index(self) -> Optional[int]:
        if self._pos >= len(self._indices):
            return None
        idx = self._indices[self._pos]
        self._pos += 1
        return idx


class PrefetchingSampler:
    """Index queue with fetch-size / pre-fetch-threshold policy.

    Wraps any index sequence (the sub-sampler's output) without altering the
    emitted order. Internally it is a queue of indices already handed to the
    pre-fetch service: whenever the queue length is at or below the
    threshold and indices remain, one more fetch of min(fetch_size,
    remaining) indices is requested and appended. A threshold of zero
    therefore only fetches again once the queue has been fully depleted.
    """

    def __init__(
        self,
        indices: Sequence[int],
        fetch_size: int,
        prefetch_threshold: int = 0,
        request_fn: Optional[Callable[[list[int]], None]] = None,
    ):
        if fetch_size < 1:
            raise ValueError("fetch_size >= 1 required")
        if prefetch_threshold < 0:
            raise ValueError("prefetch_threshold >= 0 required")
        self._indices = indices
        self._pos = 0
        self.fetch_size = fetch_size
        self.prefetch_threshold = prefetch_threshold
        self.request_fn = request_fn
        self._queue: deque[int] = deque()

    def _maybe_request(self) -> None:
        while (
            len(self._queue) <= self.prefetch_threshold
            and self._pos < len(self._indices)
        ):
            batch = [int(i) for i in self._indices[self._pos : self._pos + self.fetch_size]]
            self._pos += len(batch)
            if self.request_fn is not None:
                self.request_fn(batch)
            self._queue.extend(batch)

    def next_index(self) -> Optional[int]:
        if not self._queue:
            self._maybe_request()
            if not self._queue:
                return None
        idx = self._queue.popleft()
        self._maybe_request()
        return idx


class PrefetchService:
    """Asynchronous fetch executor on the virtual timeline.

    ``request_fetch`` acknowledges immediately (no virtual time passes for
    the caller). The job itself, one full-bucket listing pass followed by a
    parallel fetch of the requested indices, runs off the training path:
    jobs for one node execute in request order, one at a time, so a job
    starts at max(request time, previous completion). All fetched samples
    become cache-resident at the job's completion instant, at which point
    the job's store traffic is also merged into the store ledger.

    A missing index aborts its whole job; the error is recorded for the run
    report and the training path is unaffected (it falls back to the store).
    """

    def __init__(
        self,
        store: BackingStore,
        cache: FifoCache,
        workers: int,
        page_size: int,
        list_once_per_node: bool = False,
    ):
        if workers < 1:
            raise ValueError("workers >= 1 required")
        self.store = store
        self.cache = cache
        self.workers = workers
        self.page_size = page_size
        self.list_once_per_node = list_once_per_node
        self._listed = False
        self._last_completion = 0.0
        self._pending: deque[tuple[float, list, LedgerSnapshot]] = deque()
        self.errors: list[str] = []

    @property
    def in_flight(self) -> int:
        return len(self._pending)

    def request_fetch(self, indices: Sequence[int], now: float) -> None:
        """Accept a fetch request at virtual time ``now``; returns at once."""
        if len(indices) == 0:
            return
        start = max(now, self._last_completion)
        scratch = RequestLedger()
        listing_time = 0.0
        if not (self.list_once_per_node and self._listed):
            _, listing_time = self.store.listing_pass(
                self.page_size, ledger=scratch
            )
            self._listed = True
        keys = [self.store.key(i) for i in indices]
        try:
            records, makespan = self.store.fetch_many(
                keys, self.workers, ledger=scratch
            )
        except NotFoundError as exc:
            self.errors.append(f"fetch job aborted: {exc}")
            return
        completion = start + listing_time + makespan
        self._last_completion = completion
        self._pending.append((completion, records, scratch.snapshot()))

    def apply_completions(self, now: Optional[float] = None) -> int:
        """Make every job completed by ``now`` (all jobs if None) visible.

        Inserts the job's records into the cache in request order and merges
        its request counts into the store ledger. Returns the number of jobs
        applied.
        """
        applied = 0
        put = self.cache.put
        while self._pending and (now is None or self._pending[0][0] <= now):
            _, records, delta = self._pending.popleft()
            for record in records:
                put(record)
            self.store.ledger.merge(delta)
            applied += 1
        return applied


class CachingDataset:
    """Cache-first sample lookup with store fallback.

    ``load_sample`` checks the cache, then the store. The returned loading
    time is what the training loop waited: the cache lookup latency on a
    hit, lookup plus the store's service time on a miss.
    """

    def __init__(
        self,
        cache: FifoCache,
        store: BackingStore,
        insert_on_worker_miss: bool = False,
        hit_latency: float = 0.0,
    ):
        self.cache = cache
        self.store = store
        self.insert_on_worker_miss = insert_on_worker_miss
        self.hit_latency = hit_latency

    def load_sample(self, key: SampleKey) -> tuple[bytes, float, bool]:
        payload = self.cache.get(key)
        if payload is not None:
            return payload, self.hit_latency, True
        record, service_time = self.store.get_object(key)
        if self.insert_on_worker_miss:
            self.cache.put(record)
        return record.payload, self.hit_latency + service_time, False


class BatchLoader:
    """Draws mini-batches, advancing the shared virtual clock per sample.

    Pops indices one at a time (so fetch requests are stamped at the pop
    instant), applies any pre-fetch completions due by the current clock,
    loads the sample, and advances the clock by its loading time. The final
    batch of a partition may be short; an exhausted partition yields None.
    """

    def __init__(
        self,
        sampler,
        dataset,
        batch_size: int,
        clock,
        session_id: str,
        service: Optional[PrefetchService] = None,
    ):
        if batch_size < 1:
            raise ValueError("batch_size >= 1 required")
        self.sampler = sampler
        self.dataset = dataset
        self.batch_size = batch_size
        self.clock = clock
        self.session_id = session_id
        self.service = service

    def next_batch(self) -> Optional[tuple[list[bytes], float]]:
        payloads: list[bytes] = []
        total = 0.0
        next_index = self.sampler.next_index
        load = self.dataset.load_sample
        clock = self.clock
        service = self.service
        session = self.session_id
        for _ in range(self.batch_size):
            idx = next_index()
            if idx is None:
                break
            if service is not None:
                service.apply_completions(clock.now)
            payload, loading_time, _ = load(SampleKey(session, idx))
            clock.advance(loading_time)
            total += loading_time
            payloads.append(payload)
        if not payloads:
            return None
        return payloads, total
