"""Bundled workload presets and cost scenarios.

Two reference workloads at desk scale: an MNIST-sized job (60k samples, a
small CNN whose two-epoch compute totals 14.7 s) and a CIFAR-10-sized job
(50k samples, a ResNet-class model totaling 147.2 s). Per-object size is 1
KiB for both; the datasets differ in sample count and compute time, which is
what drives their different loading behavior. Compute is charged as a
constant per batch: the measured total divided by the run's batch count.

The cost scenarios carry each arm's measured loading-wait analogue (hours of
t_d) plus the storage-sizing constants; evaluating them through the cost
expressions reproduces the reference cost table for both workloads.
"""

from __future__ import annotations

import math

from .core import DatasetSpec, ExperimentConfig
from .store import LatencyModel, calibrate_disk, calibrate_object_store

WORKLOADS = ("mnist", "cifar10")

#: Measured two-epoch compute totals (seconds) for the reference models.
TOTAL_COMPUTE_S = {"mnist": 14.7, "cifar10": 147.2}
NUM_SAMPLES = {"mnist": 60000, "cifar10": 50000}
OBJECT_SIZE_BYTES = 1024

#: VM-hour rate for the reference node shape (2 vCPU, 13 GB, one K80).
VM_HOURLY_RATE = 0.5684
#: GB-month rates for VM disk and bucket storage.
VM_DISK_RATE = 0.04
BUCKET_STORAGE_RATE = 0.026
#: OS + dependencies footprint per node, GB.
ROOT_DISK_GB = 16.2


def dataset(workload: str) -> DatasetSpec:
    _check(workload)
    return DatasetSpec(NUM_SAMPLES[workload], OBJECT_SIZE_BYTES)


def compute_time_per_batch(
    workload: str, nodes: int = 3, epochs: int = 2, batch_size: int = 512
) -> float:
    """Measured total compute spread evenly over the run's batches."""
    _check(workload)
    ds = dataset(workload)
    batches_per_epoch = math.ceil(ds.partition_size(nodes) / batch_size)
    return TOTAL_COMPUTE_S[workload] / (epochs * batches_per_epoch)


def experiment(workload: str, **overrides) -> ExperimentConfig:
    """The 50/50 configuration for a workload (cache 2048, f = threshold = 1024)."""
    _check(workload)
    base = dict(
        nodes=3,
        epochs=2,
        batch_size=512,
        fetch_size=1024,
        prefetch_threshold=1024,
        cache_capacity=2048,
        parallel_fetch_workers=16,
        page_size=1000,
        trials=3,
        seed=42,
        mode="cache+prefetch",
    )
    base.update(overrides)
    base.setdefault(
        "compute_time_per_batch",
        compute_time_per_batch(
            workload, base["nodes"], base["epochs"], base["batch_size"]
        ),
    )
    return ExperimentConfig(**base)


def object_store_latency(object_size_bytes: int = OBJECT_SIZE_BYTES) -> LatencyModel:
    return calibrate_object_store(object_size_bytes)


def disk_latency() -> LatencyModel:
    return calibrate_disk()


# Loading-wait analogues per arm (hours of t_d per run) and the measured
# compute hours, recorded from the reference trials of each workload.
_COST_TIMES = {
    "mnist": {
        "t_c_hours": 14.7 / 3600,
        "t_d_disk_hours": 0.054561,
        "t_d_bucket_hours": 0.418155,
        "t_d_full_fetch_1024_hours": 0.089747,
        "t_d_full_fetch_2048_hours": 0.066290,
        "t_d_fifty_fifty_hours": 0.060425,
    },
    "cifar10": {
        "t_c_hours": 147.2 / 3600,
        "t_d_disk_hours": 0.123315,
        "t_d_bucket_hours": 0.381349,
        "t_d_full_fetch_1024_hours": 0.105722,
        "t_d_full_fetch_2048_hours": 0.093993,
        "t_d_fifty_fifty_hours": 0.058806,
    },
}


def cost_scenario(workload: str) -> dict:
    """Flat cost-scenario document for a workload's five standard arms."""
    _check(workload)
    doc = {
        "workload": workload,
        "n": 3,
        "e": 2,
        "m": NUM_SAMPLES[workload],
        "page_size": 1000,
        "object_size_bytes": OBJECT_SIZE_BYTES,
        "s_r_gb": ROOT_DISK_GB,
        "storage_month_fraction": 1.0,
        "c_c": VM_HOURLY_RATE,
        "c_d": VM_DISK_RATE,
        "c_b": BUCKET_STORAGE_RATE,
        "fetch_count_basis": "per-node",
    }
    doc.update(_COST_TIMES[workload])
    return doc


def _check(workload: str) -> None:
    if workload not in WORKLOADS:
        raise ValueError(f"unknown workload {workload!r}; expected one of {WORKLOADS}")
