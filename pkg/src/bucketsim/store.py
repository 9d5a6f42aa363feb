"""Backing stores: a latency-modeled simulated bucket and a local-directory store.

Stores are clock-agnostic. Every operation returns its modeled service time
as a value; nothing ever sleeps, so the experiment harness owns time and
tests run fast and deterministically.

Object storage fetches one object per request. There is no bulk-download
operation; multi-object transfer is only ever repeated single gets, which
``fetch_many`` schedules across a bounded worker pool. Listing is paged and
billed separately (Class A requests) from object gets (Class B requests).

The latency model splits a single get into a fixed per-request overhead plus
payload bytes over bandwidth. Parallel fetching does not scale linearly in
practice: measured 16-way throughput on small objects is about 5.66x the
sequential rate, not 16x. The model reproduces that by inflating the fixed
overhead linearly with the number of concurrently active workers, calibrated
so the 16-worker aggregate rate matches the measured one while single-get
times are unchanged.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from .core import DatasetSpec, SampleKey, SampleRecord

#: Transfer rates are quoted in decimal units (1 kB = 1000 bytes).
KB = 1000.0
MB = 1000_000.0

#: Default calibration targets for the simulated bucket and disk, measured
#: reading an MNIST-sized corpus of ~1 KiB objects into memory.
SEQUENTIAL_OBJECT_BYTES_PER_SEC = 49.80 * KB
PARALLEL_OBJECT_BYTES_PER_SEC = 281.73 * KB
PARALLEL_WORKERS_MEASURED = 16
DISK_BYTES_PER_SEC = 18.63 * MB
DEFAULT_OVERHEAD_FRACTION = 0.7
DEFAULT_LIST_LATENCY = 0.010


class NotFoundError(KeyError):
    """A key names no object in the store (dataset/config mismatch)."""


class ProtocolError(ValueError):
    """A listing page token is malformed."""


@dataclass(frozen=True)
class LatencyModel:
    """Service-time model for one store.

    ``service_time(size)`` = per_request_overhead + size / bandwidth, always
    positive. Under concurrent fetching the overhead term is inflated by
    ``1 + contention_per_worker * (workers - 1)``.
    """

    per_request_overhead: float
    bandwidth_bytes_per_sec: float
    list_latency: float = DEFAULT_LIST_LATENCY
    contention_per_worker: float = 0.0

    def service_time(self, size_bytes: int, concurrency: int = 1) -> float:
        overhead = self.per_request_overhead * (
            1.0 + self.contention_per_worker * (concurrency - 1)
        )
        return overhead + size_bytes / self.bandwidth_bytes_per_sec

    def to_dict(self) -> dict:
        return asdict(self)


def calibrate_object_store(
    object_size_bytes: int = 1024,
    sequential_bytes_per_sec: float = SEQUENTIAL_OBJECT_BYTES_PER_SEC,
    parallel_bytes_per_sec: float = PARALLEL_OBJECT_BYTES_PER_SEC,
    parallel_workers: int = PARALLEL_WORKERS_MEASURED,
    overhead_fraction: float = DEFAULT_OVERHEAD_FRACTION,
    list_latency: float = DEFAULT_LIST_LATENCY,
) -> LatencyModel:
    """Derive a bucket LatencyModel from throughput targets.

    ``overhead_fraction`` of the sequential per-object time is assigned to
    fixed overhead (small objects are overhead-dominated); the rest is
    bandwidth. The contention coefficient is then solved so that
    ``parallel_workers`` concurrent fetchers achieve exactly
    ``parallel_bytes_per_sec`` aggregate throughput.
    """
    if not 0.0 < overhead_fraction < 1.0:
        raise ValueError("overhead_fraction must be in (0, 1)")
    total = object_size_bytes / sequential_bytes_per_sec
    overhead = overhead_fraction * total
    bandwidth = sequential_bytes_per_sec / (1.0 - overhead_fraction)
    per_object_parallel = object_size_bytes * parallel_workers / parallel_bytes_per_sec
    contention = (
        (per_object_parallel - (total - overhead)) / overhead - 1.0
    ) / (parallel_workers - 1)
    return LatencyModel(overhead, bandwidth, list_latency, max(0.0, contention))


def calibrate_disk(
    bytes_per_sec: float = DISK_BYTES_PER_SEC, list_latency: float = 0.0
) -> LatencyModel:
    """Disk LatencyModel: pure bandwidth, no per-request overhead."""
    return LatencyModel(0.0, bytes_per_sec, list_latency, 0.0)


class LedgerSnapshot(NamedTuple):
    class_a: int
    class_b: int
    bytes_fetched: int

    def __sub__(self, other: "LedgerSnapshot") -> "LedgerSnapshot":
        return LedgerSnapshot(
            self.class_a - other.class_a,
            self.class_b - other.class_b,
            self.bytes_fetched - other.bytes_fetched,
        )


class RequestLedger:
    """Per-store accounting of API requests and bytes.

    Class A counts listing requests, Class B counts object gets. Counters
    only ever increase within a run; updates are lock-protected so one
    training-loop reader and one pre-fetch writer never tear.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.class_a_count = 0
        self.class_b_count = 0
        self.bytes_fetched = 0

    def record_get(self, size_bytes: int) -> None:
        with self._lock:
            self.class_b_count += 1
            self.bytes_fetched += size_bytes

    def record_list(self, pages: int = 1) -> None:
        with self._lock:
            self.class_a_count += pages

    def merge(self, delta: LedgerSnapshot) -> None:
        with self._lock:
            self.class_a_count += delta.class_a
            self.class_b_count += delta.class_b
            self.bytes_fetched += delta.bytes_fetched

    def snapshot(self) -> LedgerSnapshot:
        with self._lock:
            return LedgerSnapshot(
                self.class_a_count, self.class_b_count, self.bytes_fetched
            )


class BackingStore:
    """Base class for stores: single-object gets, paged listing, a ledger."""

    session_id: str
    latency: LatencyModel

    @property
    def num_samples(self) -> int:
        raise NotImplementedError

    @property
    def ledger(self) -> RequestLedger:
        return self._ledger

    def key(self, index: int) -> SampleKey:
        return SampleKey(self.session_id, index)

    def _get(
        self, key: SampleKey, concurrency: int, ledger: Optional[RequestLedger]
    ) -> tuple[SampleRecord, float]:
        raise NotImplementedError

    def get_object(self, key: SampleKey) -> tuple[SampleRecord, float]:
        """Fetch one object; returns (record, modeled service time)."""
        return self._get(key, 1, None)

    def list_page(
        self, page_token: Optional[str], page_size: int
    ) -> tuple[list[SampleKey], Optional[str], float]:
        """One listing page of up to ``page_size`` keys, in index order.

        ``page_token`` of None starts from the beginning; the returned token
        resumes after the page, or is None once exhausted. Each call is one
        Class A request.
        """
        if page_size < 1:
            raise ValueError("page_size >= 1 required")
        if page_token is None:
            offset = 0
        else:
            try:
                offset = int(page_token)
            except (TypeError, ValueError):
                raise ProtocolError(f"invalid page token: {page_token!r}")
            if not 0 <= offset <= self.num_samples:
                raise ProtocolError(f"invalid page token: {page_token!r}")
        end = min(offset + page_size, self.num_samples)
        keys = [self.key(i) for i in range(offset, end)]
        self._ledger.record_list(1)
        next_token = str(end) if end < self.num_samples else None
        return keys, next_token, self.latency.list_latency

    def listing_pass(
        self,
        page_size: int,
        num_keys: Optional[int] = None,
        ledger: Optional[RequestLedger] = None,
    ) -> tuple[int, float]:
        """Charge a full listing enumeration without materializing keys.

        Equivalent to paging through ``num_keys`` keys (the whole store by
        default) with ``list_page``: ceil(num_keys / page_size) Class A
        requests, each costing ``list_latency``.
        """
        if page_size < 1:
            raise ValueError("page_size >= 1 required")
        count = self.num_samples if num_keys is None else num_keys
        pages = -(-count // page_size) if count > 0 else 0
        (ledger or self._ledger).record_list(pages)
        return pages, pages * self.latency.list_latency

    def fetch_many(
        self,
        keys: Sequence[SampleKey],
        workers: int,
        ledger: Optional[RequestLedger] = None,
    ) -> tuple[list[SampleRecord], float]:
        """Fetch all keys with a greedy schedule of at most ``workers`` fetchers.

        Each worker executes single gets serially; the next get goes to the
        worker that frees up first. Under contention, spawning every allowed
        worker can be slower than using fewer (same number of rounds, higher
        per-request overhead), so the pool caps its effective concurrency at
        whatever width finishes soonest; makespan is therefore monotone
        non-increasing in ``workers``. With uniform object sizes and a
        contention-free model this is ceil(len(keys) / workers) *
        service_time. A missing key aborts the whole call; partial results
        are discarded.
        """
        if not keys:
            raise ValueError("fetch_many requires a non-empty key list")
        if workers < 1:
            raise ValueError("workers >= 1 required")
        records = []
        sizes = []
        for key in keys:
            record, _ = self._get(key, 1, ledger)
            records.append(record)
            sizes.append(record.size_bytes)
        best = float("inf")
        for conc in range(1, min(workers, len(keys)) + 1):
            free = [0.0] * conc
            for size in sizes:
                slot = min(range(conc), key=free.__getitem__)
                free[slot] += self.latency.service_time(size, conc)
            best = min(best, max(free))
        return records, best


class SimulatedBucket(BackingStore):
    """In-memory object store with modeled latency and synthetic payloads.

    Payloads are deterministic per index and exactly
    ``dataset.object_size_bytes`` long, so round trips are checkable without
    holding a real corpus.
    """

    def __init__(
        self,
        dataset: DatasetSpec,
        latency: Optional[LatencyModel] = None,
        session_id: str = "session",
    ) -> None:
        self.dataset = dataset
        self.latency = latency or calibrate_object_store(dataset.object_size_bytes)
        self.session_id = session_id
        self._ledger = RequestLedger()
        self._pad = bytes(dataset.object_size_bytes)

    @property
    def num_samples(self) -> int:
        return self.dataset.num_samples

    def _payload(self, index: int) -> bytes:
        size = self.dataset.object_size_bytes
        prefix = b"%016d" % index
        if size <= len(prefix):
            return prefix[:size]
        return prefix + self._pad[: size - len(prefix)]

    def _get(self, key, concurrency, ledger):
        index = key.index
        if not 0 <= index < self.dataset.num_samples:
            raise NotFoundError(
                f"no object for index {index} (dataset has "
                f"{self.dataset.num_samples} samples)"
            )
        size = self.dataset.object_size_bytes
        (ledger or self._ledger).record_get(size)
        record = SampleRecord(key, self._payload(index), size)
        return record, self.latency.service_time(size, concurrency)

    def fetch_many(self, keys, workers, ledger=None):
        # Uniform sizes make the greedy schedule closed-form per width.
        if not keys:
            raise ValueError("fetch_many requires a non-empty key list")
        if workers < 1:
            raise ValueError("workers >= 1 required")
        records = [self._get(key, 1, ledger)[0] for key in keys]
        size = self.dataset.object_size_bytes
        count = len(keys)
        best = min(
            -(-count // conc) * self.latency.service_time(size, conc)
            for conc in range(1, min(workers, count) + 1)
        )
        return records, best


MANIFEST_NAME = "manifest.json"


def write_local_dataset(root: str | Path, dataset: DatasetSpec) -> Path:
    """Materialize a dataset as zero-padded index-named files plus a manifest."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    width = len(str(max(dataset.num_samples - 1, 0)))
    pad = bytes(dataset.object_size_bytes)
    for i in range(dataset.num_samples):
        prefix = b"%016d" % i
        payload = (prefix + pad)[: dataset.object_size_bytes]
        if dataset.object_size_bytes <= len(prefix):
            payload = prefix[: dataset.object_size_bytes]
        (root / f"{i:0{width}d}").write_bytes(payload)
    manifest = {
        "num_samples": dataset.num_samples,
        "object_size_bytes": dataset.object_size_bytes,
    }
    (root / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True))
    return root


def local_dir_store(
    path: str | Path,
    latency: Optional[LatencyModel] = None,
    session_id: str = "session",
) -> "LocalDirStore":
    """Open a directory of index-named files as a BackingStore."""
    return LocalDirStore(path, latency=latency, session_id=session_id)


class LocalDirStore(BackingStore):
    """Directory-backed store: files named by zero-padded decimal index.

    The manifest records the sample count and nominal object size. Reads
    return the actual file bytes; service time is modeled from the disk
    latency model (default calibrated to the measured 18.63 MB/s small-file
    rate). The ledger still counts operations even though the cost model
    treats local reads as free.
    """

    def __init__(self, root, latency=None, session_id="session"):
        self.root = Path(root)
        manifest_path = self.root / MANIFEST_NAME
        if not manifest_path.exists():
            raise NotFoundError(f"missing manifest: {manifest_path}")
        manifest = json.loads(manifest_path.read_text())
        self._num_samples = int(manifest["num_samples"])
        self.object_size_bytes = int(manifest["object_size_bytes"])
        self._width = len(str(max(self._num_samples - 1, 0)))
        self.latency = latency or calibrate_disk()
        self.session_id = session_id
        self._ledger = RequestLedger()

    @property
    def num_samples(self) -> int:
        return self._num_samples

    def _get(self, key, concurrency, ledger):
        index = key.index
        path = self.root / f"{index:0{self._width}d}"
        if not 0 <= index < self._num_samples or not path.exists():
            raise NotFoundError(f"no file for index {index} under {self.root}")
        payload = path.read_bytes()
        (ledger or self._ledger).record_get(len(payload))
        record = SampleRecord(key, payload, len(payload))
        return record, self.latency.service_time(len(payload), concurrency)
