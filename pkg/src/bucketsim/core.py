"""Shared domain types, experiment configuration, and seeded randomness.

A dataset is ``m`` uniformly sized objects held in a storage bucket. ``n``
training nodes each read a fresh random partition of it every epoch, in
mini-batches, optionally through a per-node FIFO cache fed by an
asynchronous pre-fetch service. The knobs that matter throughout the
package live in :class:`ExperimentConfig`; every field is either one of
the cost-model symbols (``n``, ``e``, ``f``, ``p``, ``k``, ``m_c``) or an
explicitly invented simulation knob, see the config reference in the
README.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

#: The four experimental arms: read straight from the bucket, read through a
#: cache that inserts on worker misses, cache plus asynchronous pre-fetching,
#: or read from local disk.
MODES = ("bucket-direct", "cache-only", "cache+prefetch", "disk")


class SampleKey(NamedTuple):
    """Identity of one training sample within a training session.

    Two keys are equal iff both fields are equal; caches are keyed by the
    pair so sessions never see each other's entries.
    """

    session_id: str
    index: int


class SampleRecord(NamedTuple):
    """A sample's key plus its payload bytes."""

    key: SampleKey
    payload: bytes
    size_bytes: int


@dataclass(frozen=True)
class DatasetSpec:
    """A dataset of ``num_samples`` objects, each ``object_size_bytes`` long.

    Object sizes are uniform; ``total_bytes`` is the cost model's s_t.
    """

    num_samples: int
    object_size_bytes: int

    @property
    def total_bytes(self) -> int:
        return self.num_samples * self.object_size_bytes

    def partition_size(self, nodes: int) -> int:
        """Per-node partition size, ceil(m / n)."""
        return -(-self.num_samples // nodes)


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of a simulated training run.

    ``fetch_size`` and ``prefetch_threshold`` control the pre-fetching
    sampler: a new fetch of ``fetch_size`` indices is requested whenever
    the count of fetched-but-not-yet-trained-on samples drops to the
    threshold. ``cache_capacity`` is in samples; 0 disables caching.
    ``compute_time_per_batch`` is charged after each mini-batch's samples
    are loaded. Durations are seconds.
    """

    nodes: int = 3
    epochs: int = 2
    batch_size: int = 512
    fetch_size: int = 1024
    prefetch_threshold: int = 0
    cache_capacity: int = 2048
    parallel_fetch_workers: int = 16
    page_size: int = 1000
    compute_time_per_batch: float = 0.18375
    trials: int = 3
    seed: int = 42
    mode: str = "cache+prefetch"
    cache_hit_latency_s: float = 0.0
    list_once_per_node: bool = False


def validate_config(config: ExperimentConfig, dataset: DatasetSpec) -> list[str]:
    """Return every violated invariant as a human-readable message.

    A valid pair returns the empty list. Validation never raises; callers
    decide what to do with the violations.
    """
    v: list[str] = []
    if dataset.num_samples < 1:
        v.append("num_samples >= 1 required")
    if dataset.object_size_bytes < 1:
        v.append("object_size_bytes >= 1 required")
    if config.nodes < 1:
        v.append("nodes >= 1 required")
    if config.epochs < 1:
        v.append("epochs >= 1 required")
    if config.batch_size < 1:
        v.append("batch_size >= 1 required")
    if config.fetch_size < 1:
        v.append("fetch_size >= 1 required")
    if config.prefetch_threshold < 0:
        v.append("prefetch_threshold >= 0 required")
    if config.cache_capacity < 0:
        v.append("cache_capacity >= 0 required")
    if config.parallel_fetch_workers < 1:
        v.append("parallel_fetch_workers >= 1 required")
    if config.page_size < 1:
        v.append("page_size >= 1 required")
    if config.compute_time_per_batch < 0:
        v.append("compute_time_per_batch >= 0 required")
    if config.cache_hit_latency_s < 0:
        v.append("cache_hit_latency_s >= 0 required")
    if config.trials < 1:
        v.append("trials >= 1 required")
    if config.mode not in MODES:
        v.append(f"mode must be one of {', '.join(MODES)}")
    if (
        config.mode == "cache+prefetch"
        and config.cache_capacity > 0
        and config.prefetch_threshold >= config.cache_capacity
    ):
        v.append("prefetch_threshold must be < cache_capacity")
    if config.nodes >= 1 and dataset.num_samples >= 1:
        part = dataset.partition_size(config.nodes)
        if config.fetch_size > part:
            v.append(
                f"fetch_size must be <= per-node partition size ({part})"
            )
    return v


def seeded_rng(seed: int, stream_label: str) -> np.random.Generator:
    """Deterministic random stream for (seed, label).

    Identical pairs yield identical streams; distinct labels yield
    independent streams. Labels are hashed with SHA-256 so the mapping is
    stable across platforms and processes.
    """
    digest = hashlib.sha256(f"{seed}|{stream_label}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "big"))


# --- flat config documents -------------------------------------------------
#
# Experiments load from a flat key/value JSON document whose keys are exactly
# the field names of ExperimentConfig, DatasetSpec and LatencyModel. CLI
# flags override file values.

CONFIG_KEYS = tuple(f.name for f in fields(ExperimentConfig))
DATASET_KEYS = ("num_samples", "object_size_bytes")
LATENCY_KEYS = (
    "per_request_overhead",
    "bandwidth_bytes_per_sec",
    "list_latency",
    "contention_per_worker",
)


def load_flat_config(path: str | Path) -> dict:
    """Load a flat key/value JSON config document."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"config file {path} must hold a flat JSON object")
    return doc


def split_config_dict(doc: dict) -> tuple[dict, dict, dict]:
    """Split a flat config dict into (config, dataset, latency) kwargs.

    Unknown keys are an error so typos fail fast.
    """
    cfg: dict = {}
    ds: dict = {}
    lat: dict = {}
    for key, value in doc.items():
        if key in CONFIG_KEYS:
            cfg[key] = value
        elif key in DATASET_KEYS:
            ds[key] = value
        elif key in LATENCY_KEYS:
            lat[key] = value
        else:
            raise ValueError(f"unknown config key: {key!r}")
    return cfg, ds, lat
