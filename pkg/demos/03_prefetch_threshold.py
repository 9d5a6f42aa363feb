"""The pre-fetch threshold and the 50/50 configuration
=======================================================

The threshold is the minimum number of fetched-but-untrained samples: when
the sampler's queue drains to it, the next fetch fires. Threshold zero
waits for the queue to empty; raising it overlaps the next download with
training on the current batch of samples.

The 50/50 configuration sets fetch size and threshold to half the cache:
one fetch is always resident while the next is in flight, and each fetch
fits in the cache. On compute-heavy workloads this hides nearly all of the
download time; doubling the fetch size instead (Full Fetch) keeps the
training loop exposed to the first fetch of every window.
"""

from bucketsim import run_experiment
from bucketsim import presets

cifar = presets.dataset("cifar10")
mnist = presets.dataset("mnist")

print("threshold sweep at cache 2048, f=1024 (fractions of the cache):")
print(f"{'workload':<10} {'t=0':>8} {'t=512':>8} {'t=1024':>8} {'t=1536':>8}")
for workload, dataset in (("mnist", mnist), ("cifar10", cifar)):
    rates = []
    for threshold in (0, 512, 1024, 1536):
        config = presets.experiment(workload, prefetch_threshold=threshold, trials=3)
        rates.append(run_experiment(config, dataset).run_aggregate("miss_rate"))
    print(f"{workload:<10} " + " ".join(f"{r:>8.4f}" for r in rates))

print()
print("50/50 vs Full Fetch at cache 2048 (long-compute workload):")
fifty = run_experiment(presets.experiment("cifar10", trials=3), cifar)
full = run_experiment(
    presets.experiment("cifar10", fetch_size=2048, prefetch_threshold=0, trials=3),
    cifar,
)
m_fifty = fifty.run_aggregate("miss_rate")
m_full = full.run_aggregate("miss_rate")
print(f"  Full Fetch (f=2048, t=0): {m_full:.4f}")
print(f"  50/50 (f=1024, t=1024):   {m_fifty:.4f}  ({1 - m_fifty / m_full:.0%} lower)")

print()
print("loading-time payoff vs reading the bucket directly:")
for workload, dataset in (("mnist", mnist), ("cifar10", cifar)):
    direct = run_experiment(
        presets.experiment(workload, mode="bucket-direct", trials=3), dataset
    )
    tuned = run_experiment(presets.experiment(workload, trials=3), dataset)
    saved = 1 - tuned.total_loading_aggregate() / direct.total_loading_aggregate()
    print(
        f"  {workload}: {direct.total_loading_aggregate():7.1f} s -> "
        f"{tuned.total_loading_aggregate():6.1f} s  ({saved:.1%} less waiting)"
    )
