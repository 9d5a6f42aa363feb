import math
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bucketsim import presets
from bucketsim.core import DatasetSpec, ExperimentConfig
from bucketsim.costs import (
    CostInputs,
    PricingRates,
    api_request_counts,
    cost_breakdown,
    cost_bucket_baseline,
    cost_disk_baseline,
    cost_prefetch,
    present,
    reconcile,
    run_cost_scenario,
)
from bucketsim.harness import run_experiment


def inputs(**overrides):
    base = dict(
        n=3,
        s_r_gb=16.0,
        s_t_gb=0.06,
        m=60000,
        m_c=0,
        p=1000,
        e=2,
        f=1024,
        t_c_hours=0.0,
        t_d_hours=0.0,
        storage_month_fraction=1.0,
    )
    base.update(overrides)
    return CostInputs(**base)


RATES = PricingRates(c_c=0.5, c_d=0.04, c_b=0.026)


class TestDiskBaseline:
    def test_zero_case(self):
        zero = inputs(s_r_gb=0.0, s_t_gb=0.0)
        assert cost_disk_baseline(zero, RATES) == 0.0

    def test_hand_evaluated_example(self):
        # storage term 0.65 per node (c_d 6.5 * 0.1 GB), tau = 0.5 * 0.1 h,
        # total = 3 * (0.65 + 0.05) = 2.10
        rates = PricingRates(c_c=0.5, c_d=6.5, c_b=0.0)
        example = inputs(s_r_gb=0.06, s_t_gb=0.04, t_c_hours=0.06, t_d_hours=0.04)
        assert cost_disk_baseline(example, rates) == pytest.approx(2.10)

    def test_linear_in_n(self):
        one = cost_disk_baseline(inputs(n=1, t_c_hours=0.3), RATES)
        two = cost_disk_baseline(inputs(n=2, t_c_hours=0.3), RATES)
        assert two == pytest.approx(2 * one)


class TestBucketBaseline:
    def test_api_request_counts(self):
        a, b = api_request_counts(inputs())
        assert (a, b) == (360, 120000)

    def test_api_dollars_at_default_rates(self):
        # 360 listing requests and 120000 gets at the quoted per-10k prices
        breakdown = cost_breakdown(inputs(), RATES, "bucket")
        assert breakdown.api == pytest.approx(360 * 0.05 / 10000 + 120000 * 0.002 / 10000)
        assert breakdown.api == pytest.approx(0.0258)

    def test_requires_no_cache(self):
        with pytest.raises(ValueError, match="m_c"):
            cost_bucket_baseline(inputs(m_c=10), RATES)

    def test_vm_storage_reduces_to_root_disk(self):
        breakdown = cost_breakdown(inputs(), RATES, "bucket")
        expected_storage = RATES.c_b * 0.06 + 3 * RATES.c_d * 16.0
        assert breakdown.storage == pytest.approx(expected_storage)

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            inputs(t_d_hours=-1.0)
        with pytest.raises(ValueError):
            PricingRates(c_c=-0.1, c_d=0.0, c_b=0.0)


class TestPrefetch:
    def test_global_listing_amplification(self):
        a, b = api_request_counts(inputs(), prefetch=True, fetch_count_basis="global")
        assert a == 2 * 3 * 60 * math.ceil(60000 / 1024)
        assert a == 21240
        assert b == 120000

    def test_per_node_fetch_count(self):
        a, _ = api_request_counts(inputs(), prefetch=True, fetch_count_basis="per-node")
        assert a == 2 * 60 * 3 * math.ceil(20000 / 1024)
        assert a == 7200

    def test_reduces_to_bucket_when_f_equals_m(self):
        for basis in ("global", "per-node"):
            assert cost_prefetch(
                inputs(f=60000), RATES, basis
            ) == pytest.approx(cost_bucket_baseline(inputs(), RATES))

    def test_cache_storage_term(self):
        # 2048 cached KiB-sized samples per node, prorated monthly
        with_cache = cost_breakdown(
            inputs(m_c=2048, s_t_gb=60000 * 1024 / 1e9), RATES, "prefetch"
        )
        without = cost_breakdown(
            inputs(m_c=0, s_t_gb=60000 * 1024 / 1e9), RATES, "prefetch"
        )
        per_sample_gb = 1024 / 1e9
        expected = 3 * RATES.c_d * per_sample_gb * 2048
        assert with_cache.storage - without.storage == pytest.approx(expected)

    def test_unknown_basis_rejected(self):
        with pytest.raises(ValueError, match="fetch_count_basis"):
            cost_prefetch(inputs(), RATES, "per-zone")


class TestProperties:
    @given(
        t_d=st.floats(0, 10),
        e=st.integers(1, 8),
        n=st.integers(1, 8),
        p=st.integers(1, 5000),
        f=st.integers(1, 60000),
        gb=st.floats(0, 100),
    )
    @settings(max_examples=60)
    def test_monotone_axes(self, t_d, e, n, p, f, gb):
        base = inputs()
        rates = RATES
        base_cost = cost_prefetch(base, rates)
        assert cost_prefetch(inputs(t_d_hours=t_d), rates) >= base_cost - 1e-12
        assert cost_prefetch(inputs(t_c_hours=t_d), rates) >= base_cost - 1e-12
        assert cost_prefetch(inputs(s_t_gb=0.06 + gb), rates) >= base_cost - 1e-12
        assert cost_prefetch(inputs(s_r_gb=16.0 + gb), rates) >= base_cost - 1e-12
        assert cost_prefetch(inputs(e=e + 1), rates) >= cost_prefetch(inputs(e=e), rates)
        assert cost_prefetch(inputs(n=n + 1), rates) >= cost_prefetch(inputs(n=n), rates)
        assert cost_prefetch(inputs(p=p), rates) >= cost_prefetch(inputs(p=p + 1), rates) - 1e-12
        assert cost_prefetch(inputs(f=f), rates) >= cost_prefetch(inputs(f=min(f + 1, 60000)), rates) - 1e-12

    @given(lam=st.floats(0.1, 50))
    @settings(max_examples=30)
    def test_api_rate_scaling(self, lam):
        scaled = PricingRates(
            c_c=RATES.c_c, c_d=RATES.c_d, c_b=RATES.c_b,
            c_A=RATES.c_A * lam, c_B=RATES.c_B * lam,
        )
        probe = inputs(t_c_hours=0.1, m_c=100)
        base_bd = cost_breakdown(probe, RATES, "prefetch")
        scaled_bd = cost_breakdown(probe, scaled, "prefetch")
        assert scaled_bd.api == pytest.approx(base_bd.api * lam)
        assert scaled_bd.storage == base_bd.storage
        assert scaled_bd.compute_loading == base_bd.compute_loading


def test_present_rounds_half_up():
    assert present(2.00005) == Decimal("2.0001")
    assert present(2.12344) == Decimal("2.1234")
    assert present(2.105, places=2) == Decimal("2.11")


SMALL = DatasetSpec(6000, 1024)


def small_config(**overrides):
    base = dict(
        nodes=3,
        epochs=2,
        batch_size=100,
        fetch_size=200,
        prefetch_threshold=0,
        cache_capacity=400,
        page_size=500,
        compute_time_per_batch=0.02,
        trials=1,
        seed=7,
        mode="cache+prefetch",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestReconcile:
    def test_bucket_direct_exact(self):
        report = run_experiment(small_config(mode="bucket-direct"), SMALL)
        rec = reconcile(report)
        assert rec.class_a_matches and rec.class_b_matches
        assert rec.observed_class_a == 2 * 3 * math.ceil(6000 / 500)
        assert rec.observed_class_b == 2 * 6000

    def test_prefetch_interpretations(self):
        report = run_experiment(small_config(), SMALL)
        rec = reconcile(report)
        assert rec.class_a_matches and rec.class_b_matches
        per_node = rec.predicted["class_a_per_node"]
        global_form = rec.predicted["class_a_global"]
        assert rec.observed_class_a == per_node
        assert global_form == 2 * 3 * 12 * math.ceil(6000 / 200)
        assert rec.predicted["interpretation_gap"] == pytest.approx(
            global_form / per_node
        )

    def test_cache_only_delta_vs_no_cache(self):
        report = run_experiment(
            small_config(mode="cache-only", cache_capacity=6000), SMALL
        )
        rec = reconcile(report)
        assert rec.class_b_matches  # store gets == misses
        delta = rec.predicted["delta_vs_no_cache"]
        # epoch 1 all-miss, epoch 2 roughly one third cached
        assert delta == report.ledger_totals()["hits"]
        assert delta > 0

    def test_inputs_mismatch_rejected(self):
        report = run_experiment(small_config(mode="bucket-direct"), SMALL)
        wrong = CostInputs(
            n=4, s_r_gb=0, s_t_gb=0, m=6000, m_c=0, p=500, e=2, f=200,
            t_c_hours=0, t_d_hours=0,
        )
        with pytest.raises(ValueError, match="disagree"):
            reconcile(report, wrong)


class TestScenarios:
    def test_zero_duration_scenario_is_api_plus_storage(self):
        scenario = {
            "workload": "toy",
            "n": 3,
            "e": 2,
            "m": 60000,
            "page_size": 1000,
            "object_size_bytes": 1024,
            "s_r_gb": 16.0,
            "c_c": 0.5684,
            "c_d": 0.04,
            "c_b": 0.026,
        }
        rows = run_cost_scenario(scenario)
        for row in rows:
            assert row["compute_loading"] == 0.0
            assert row["total"] == pytest.approx(row["api"] + row["storage"])
        assert rows[0]["api"] == 0.0  # disk arm has no API charges

    def test_missing_keys_rejected(self):
        with pytest.raises(ValueError, match="missing keys"):
            run_cost_scenario({"workload": "x"})

    def test_bundled_scenarios_have_five_arms(self):
        for workload in ("mnist", "cifar10"):
            rows = run_cost_scenario(presets.cost_scenario(workload))
            assert [r["arm"] for r in rows] == [
                "disk",
                "bucket",
                "full_fetch_1024",
                "full_fetch_2048",
                "fifty_fifty",
            ]

    def test_fifty_fifty_beats_bucket_for_cifar(self):
        rows = {r["arm"]: r for r in run_cost_scenario(presets.cost_scenario("cifar10"))}
        assert rows["fifty_fifty"]["total"] < rows["bucket"]["total"]
