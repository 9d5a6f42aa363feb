"""bucketsim: simulate and cost cache+prefetch data loading from object storage."""

from .cache import CacheStats, FifoCache
from .core import (
    MODES,
    DatasetSpec,
    ExperimentConfig,
    SampleKey,
    SampleRecord,
    load_flat_config,
    seeded_rng,
    validate_config,
)
from .costs import (
    CostBreakdown,
    CostInputs,
    PricingRates,
    api_request_counts,
    cost_breakdown,
    cost_bucket_baseline,
    cost_disk_baseline,
    cost_prefetch,
    reconcile,
    run_cost_scenario,
)
from .harness import (
    EpochMetrics,
    RegressionResult,
    RunReport,
    VirtualClock,
    experiment_from_dict,
    regression_loading_time_vs_missrate,
    run_experiment,
    run_sweep,
)
from .pipeline import (
    BatchLoader,
    CachingDataset,
    IndexStream,
    PartitionSampler,
    PrefetchingSampler,
    PrefetchService,
)
from .store import (
    LatencyModel,
    LocalDirStore,
    NotFoundError,
    ProtocolError,
    RequestLedger,
    SimulatedBucket,
    calibrate_disk,
    calibrate_object_store,
    local_dir_store,
    write_local_dataset,
)

__version__ = "0.1.0"

__all__ = [
    "MODES",
    "BatchLoader",
    "CacheStats",
    "CachingDataset",
    "CostBreakdown",
    "CostInputs",
    "DatasetSpec",
    "EpochMetrics",
    "ExperimentConfig",
    "FifoCache",
    "IndexStream",
    "LatencyModel",
    "LocalDirStore",
    "NotFoundError",
    "PartitionSampler",
    "PrefetchService",
    "PrefetchingSampler",
    "PricingRates",
    "ProtocolError",
    "RegressionResult",
    "RequestLedger",
    "RunReport",
    "SampleKey",
    "SampleRecord",
    "SimulatedBucket",
    "VirtualClock",
    "api_request_counts",
    "calibrate_disk",
    "calibrate_object_store",
    "cost_breakdown",
    "cost_bucket_baseline",
    "cost_disk_baseline",
    "cost_prefetch",
    "experiment_from_dict",
    "load_flat_config",
    "local_dir_store",
    "reconcile",
    "regression_loading_time_vs_missrate",
    "run_cost_scenario",
    "run_experiment",
    "run_sweep",
    "seeded_rng",
    "validate_config",
    "write_local_dataset",
]
