"""Virtual-clock experiment runner for multi-node, multi-epoch loading runs.

Nodes operate independently during data loading, so each (trial, node) pair
is simulated on its own timeline with its own store ledger; aggregate counts
are sums. Per node, per epoch, the loop draws mini-batches, pays each
sample's loading time, then pays a fixed compute time per batch, while
pre-fetch jobs consume the same virtual timeline concurrently (a job
requested at T with makespan M completes at T+M, and its samples all become
cache-resident at that instant).

Data loading time counts only time the training loop waited for samples
(cache lookup plus store fallback). Listings and background fetches advance
or occupy the timeline but are never charged to loading time.

Metrics follow the two-epoch convention: miss rate and loading time are
reported per epoch and aggregated as the mean over nodes first, then over
trials.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional, Sequence

import numpy as np

from .cache import FifoCache
from .core import (
    DatasetSpec,
    ExperimentConfig,
    split_config_dict,
    validate_config,
)
from .pipeline import (
    BatchLoader,
    CachingDataset,
    IndexStream,
    PartitionSampler,
    PrefetchingSampler,
    PrefetchService,
)
from .store import LatencyModel, SimulatedBucket, calibrate_disk, calibrate_object_store


class VirtualClock:
    """Monotonic simulated time; advances only by scheduled amounts."""

    __slots__ = ("now",)

    def __init__(self) -> None:
        self.now = 0.0

    def advance(self, dt: float) -> float:
        self.now += dt
        return self.now


@dataclass(frozen=True)
class EpochMetrics:
    """One (trial, node, epoch) row of the run report."""

    trial: int
    node: int
    epoch: int
    data_loading_time: float
    compute_time: float
    miss_rate: float
    hits: int
    misses: int
    evictions: int
    class_a: int
    class_b: int
    bytes_fetched: int


CSV_COLUMNS = (
    "trial",
    "node",
    "epoch",
    "loading_time_s",
    "compute_time_s",
    "miss_rate",
    "hits",
    "misses",
    "evictions",
    "class_a",
    "class_b",
    "bytes",
)


@dataclass
class RunReport:
    """Per-trial, per-node, per-epoch metrics plus the effective config echo.

    Any invocation is reproducible from the echoed config: feeding it back
    through the runner yields a bit-identical report.
    """

    config: dict
    dataset: dict
    latency: dict
    rows: list[EpochMetrics]
    job_errors: list[str]

    def epoch_aggregate(self, metric: str, epoch: int) -> float:
        """Mean over nodes within each trial, then mean over trials."""
        per_trial: dict[int, list[float]] = {}
        for row in self.rows:
            if row.epoch == epoch:
                per_trial.setdefault(row.trial, []).append(getattr(row, metric))
        if not per_trial:
            raise ValueError(f"no rows for epoch {epoch}")
        trial_means = [sum(v) / len(v) for _, v in sorted(per_trial.items())]
        return sum(trial_means) / len(trial_means)

    def run_aggregate(self, metric: str) -> float:
        """Mean over epochs of the per-epoch aggregates."""
        epochs = sorted({row.epoch for row in self.rows})
        vals = [self.epoch_aggregate(metric, e) for e in epochs]
        return sum(vals) / len(vals)

    def total_loading_aggregate(self) -> float:
        """Whole-run loading time: summed over epochs, nodes/trials averaged."""
        per_trial: dict[int, dict[int, float]] = {}
        for row in self.rows:
            per_trial.setdefault(row.trial, {}).setdefault(row.node, 0.0)
            per_trial[row.trial][row.node] += row.data_loading_time
        trial_means = [
            sum(nodes.values()) / len(nodes) for _, nodes in sorted(per_trial.items())
        ]
        return sum(trial_means) / len(trial_means)

    def ledger_totals(self) -> dict:
        return {
            "class_a": sum(r.class_a for r in self.rows),
            "class_b": sum(r.class_b for r in self.rows),
            "bytes_fetched": sum(r.bytes_fetched for r in self.rows),
            "misses": sum(r.misses for r in self.rows),
            "hits": sum(r.hits for r in self.rows),
        }

    def aggregates(self) -> dict:
        epochs = sorted({row.epoch for row in self.rows})
        return {
            "per_epoch": {
                str(e): {
                    "miss_rate": self.epoch_aggregate("miss_rate", e),
                    "data_loading_time": self.epoch_aggregate("data_loading_time", e),
                    "compute_time": self.epoch_aggregate("compute_time", e),
                }
                for e in epochs
            },
            "total_loading_time": self.total_loading_aggregate(),
            "ledger": self.ledger_totals(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [
                    r.trial,
                    r.node,
                    r.epoch,
                    repr(r.data_loading_time),
                    repr(r.compute_time),
                    repr(r.miss_rate),
                    r.hits,
                    r.misses,
                    r.evictions,
                    r.class_a,
                    r.class_b,
                    r.bytes_fetched,
                ]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "dataset": self.dataset,
            "latency": self.latency,
            "rows": [asdict(r) for r in self.rows],
            "aggregates": self.aggregates(),
            "job_errors": self.job_errors,
        }
        return json.dumps(doc, sort_keys=True, indent=2)


def _node_run(
    config: ExperimentConfig,
    dataset: DatasetSpec,
    bucket_latency: LatencyModel,
    disk_latency: LatencyModel,
    trial: int,
    node_rank: int,
) -> tuple[list[EpochMetrics], list[str]]:
    session = f"trial{trial}"
    mode = config.mode
    latency = disk_latency if mode == "disk" else bucket_latency
    store = SimulatedBucket(dataset, latency, session_id=session)
    cached_modes = ("cache-only", "cache+prefetch")
    cache = FifoCache(config.cache_capacity if mode in cached_modes else 0)
    view = CachingDataset(
        cache,
        store,
        insert_on_worker_miss=(mode == "cache-only"),
        hit_latency=config.cache_hit_latency_s,
    )
    service = None
    if mode == "cache+prefetch":
        service = PrefetchService(
            store,
            cache,
            workers=config.parallel_fetch_workers,
            page_size=config.page_size,
            list_once_per_node=config.list_once_per_node,
        )
    clock = VirtualClock()
    partitioner = PartitionSampler(
        dataset.num_samples, config.nodes, config.seed, label_prefix=f"trial{trial}/"
    )
    rows: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        partition = partitioner.partition(epoch, node_rank)
        ledger_before = store.ledger.snapshot()
        if mode in ("bucket-direct", "cache-only", "disk"):
            # The loader enumerates the bucket once per epoch to discover keys.
            _, listing_time = store.listing_pass(config.page_size)
            clock.advance(listing_time)
        if service is not None:
            sampler = PrefetchingSampler(
                partition,
                config.fetch_size,
                config.prefetch_threshold,
                request_fn=lambda idx: service.request_fetch(idx, clock.now),
            )
        else:
            sampler = IndexStream(partition)
        loader = BatchLoader(
            sampler, view, config.batch_size, clock, session, service=service
        )
        loading_time = 0.0
        batches = 0
        while True:
            batch = loader.next_batch()
            if batch is None:
                break
            loading_time += batch[1]
            clock.advance(config.compute_time_per_batch)
            batches += 1
        final_epoch = epoch == config.epochs - 1
        if service is not None:
            # In-flight jobs spill into the next epoch; at run end their
            # traffic still belongs to the run, so flush everything.
            service.apply_completions(None if final_epoch else clock.now)
        stats = cache.reset_epoch_stats()
        delta = store.ledger.snapshot() - ledger_before
        rows.append(
            EpochMetrics(
                trial=trial,
                node=node_rank,
                epoch=epoch,
                data_loading_time=loading_time,
                compute_time=batches * config.compute_time_per_batch,
                miss_rate=stats.miss_rate,
                hits=stats.hits,
                misses=stats.misses,
                evictions=stats.evictions,
                class_a=delta.class_a,
                class_b=delta.class_b,
                bytes_fetched=delta.bytes_fetched,
            )
        )
    errors = list(service.errors) if service is not None else []
    return rows, errors


def run_experiment(
    config: ExperimentConfig,
    dataset: DatasetSpec,
    latency_model: Optional[LatencyModel] = None,
    disk_latency_model: Optional[LatencyModel] = None,
) -> RunReport:
    """Simulate the configured run and collect its metrics.

    ``latency_model`` governs the bucket-backed modes and defaults to the
    bundled object-store calibration for the dataset's object size;
    ``disk_latency_model`` governs disk mode. Raises ValueError when the
    config is invalid.
    """
    violations = validate_config(config, dataset)
    if violations:
        raise ValueError("invalid config: " + "; ".join(violations))
    bucket_latency = latency_model or calibrate_object_store(dataset.object_size_bytes)
    disk_latency = disk_latency_model or calibrate_disk()
    rows: list[EpochMetrics] = []
    job_errors: list[str] = []
    for trial in range(config.trials):
        for node in range(config.nodes):
            node_rows, errors = _node_run(
                config, dataset, bucket_latency, disk_latency, trial, node
            )
            rows.extend(node_rows)
            job_errors.extend(errors)
    return RunReport(
        config=asdict(config),
        dataset=asdict(dataset),
        latency=bucket_latency.to_dict(),
        rows=rows,
        job_errors=job_errors,
    )


SWEEP_AXES = tuple(f.name for f in fields(ExperimentConfig))


def run_sweep(
    config: ExperimentConfig,
    dataset: DatasetSpec,
    axis: str,
    values: Sequence,
    latency_model: Optional[LatencyModel] = None,
    disk_latency_model: Optional[LatencyModel] = None,
) -> list[RunReport]:
    """One report per value of ``axis``, identical seeds across points.

    Only the swept field differs between points, so differences in the
    reports isolate the axis.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis: {axis!r}")
    reports = []
    for value in values:
        point = replace(config, **{axis: value})
        reports.append(
            run_experiment(point, dataset, latency_model, disk_latency_model)
        )
    return reports


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    degenerate: bool


def regression_loading_time_vs_missrate(
    reports: Sequence[RunReport],
) -> RegressionResult:
    """Least-squares fit of per-row loading time against miss rate.

    All equal miss rates is flagged as degenerate (no fit). In this
    simulator loading time is affine in miss count by construction, so a
    near-perfect fit validates the measurement plumbing rather than any
    modeling assumption.
    """
    xs: list[float] = []
    ys: list[float] = []
    for report in reports:
        for row in report.rows:
            xs.append(row.miss_rate)
            ys.append(row.data_loading_time)
    if len(xs) < 3 or len(set(xs)) < 2:
        return RegressionResult(float("nan"), float("nan"), float("nan"), True)
    x = np.asarray(xs)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RegressionResult(float(slope), float(intercept), r_squared, False)


def experiment_from_dict(
    doc: dict,
) -> tuple[ExperimentConfig, DatasetSpec, Optional[LatencyModel]]:
    """Build (config, dataset, latency) from a flat config document.

    Latency keys are optional; when any are present the remaining latency
    fields take the calibrated object-store defaults for the dataset's
    object size.
    """
    cfg_kwargs, ds_kwargs, lat_kwargs = split_config_dict(doc)
    config = ExperimentConfig(**cfg_kwargs)
    dataset = DatasetSpec(
        num_samples=ds_kwargs.get("num_samples", 60000),
        object_size_bytes=ds_kwargs.get("object_size_bytes", 1024),
    )
    latency = None
    if lat_kwargs:
        base = calibrate_object_store(dataset.object_size_bytes)
        latency = replace(base, **lat_kwargs)
    return config, dataset, latency
