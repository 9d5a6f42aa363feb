"""What does all this cost?
===========================

The cost model prices a training run from its resources: VM hours (compute
plus time spent waiting on data), VM disk and bucket storage, and the two
API request classes (listing vs object gets). The pre-fetch service's
naive full-bucket listing on every fetch amplifies the listing bill by the
number of fetches.

The bundled scenarios price the two reference workloads' five arms with
their measured loading-wait analogues. Bucket storage only wins once the
loading time it saves is worth more than the API requests it spends, which
is why the 50/50 row only undercuts disk on the compute-heavy workload.

The reconciliation check replays a simulated run and compares its request
ledger against the closed-form predictions, reporting both readings of the
fetch count (global ceil(m/f) vs per-node ceil(ceil(m/n)/f)).
"""

from bucketsim import reconcile, run_cost_scenario, run_experiment
from bucketsim import presets
from bucketsim.costs import present

for workload in ("mnist", "cifar10"):
    rows = run_cost_scenario(presets.cost_scenario(workload))
    print(f"{workload} cost breakdown ($):")
    print(f"  {'method':<24} {'api':>7} {'storage':>8} {'comp+load':>10} {'total':>7}")
    for row in rows:
        print(
            f"  {row['method']:<24} {present(row['api'], 2):>7} "
            f"{present(row['storage'], 2):>8} "
            f"{present(row['compute_loading'], 2):>10} "
            f"{present(row['total'], 2):>7}"
        )
    print()

print("ledger reconciliation, bucket-direct (exact by construction):")
dataset = presets.dataset("mnist")
report = run_experiment(
    presets.experiment("mnist", mode="bucket-direct", trials=1), dataset
)
rec = reconcile(report)
print(f"  observed class A {rec.observed_class_a}, class B {rec.observed_class_b}")
print(f"  predicted {rec.predicted}")

print()
print("ledger reconciliation, 50/50 pre-fetching:")
report = run_experiment(presets.experiment("mnist", trials=1), dataset)
rec = reconcile(report)
print(f"  observed class A {rec.observed_class_a} (matches per-node: {rec.class_a_matches})")
print(
    f"  global-form prediction {rec.predicted['class_a_global']} "
    f"(gap factor {rec.predicted['interpretation_gap']:.2f})"
)
print(
    f"  class B {rec.observed_class_b} = "
    f"{rec.predicted['class_b_prefetched']} prefetched + "
    f"{rec.predicted['class_b_fallback_misses']} fallback misses"
)
