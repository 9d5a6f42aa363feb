import csv
import io
import json

import pytest

from bucketsim.cli import main
from bucketsim.harness import run_experiment
from bucketsim.harness import experiment_from_dict
from bucketsim.store import calibrate_object_store


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


SMALL_FLAGS = [
    "--num-samples", "6000",
    "--object-size-bytes", "1024",
    "--nodes", "3",
    "--epochs", "2",
    "--batch-size", "100",
    "--fetch", "200",
    "--threshold", "0",
    "--cache", "400",
    "--page-size", "500",
    "--compute-time-per-batch", "0.02",
    "--trials", "1",
    "--seed", "7",
]


def test_run_bucket_direct_outputs_all_miss(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys,
        "run", "--mode", "bucket-direct", "--out", str(tmp_path), *SMALL_FLAGS,
    )
    assert code == 0
    assert "effective config" in out
    rows = list(csv.DictReader(io.StringIO((tmp_path / "report.csv").read_text())))
    assert len(rows) == 6
    assert all(float(r["miss_rate"]) == 1.0 for r in rows)
    assert (tmp_path / "report.json").exists()


def test_run_fifty_fifty_flags(capsys):
    code, out, _ = run_cli(
        capsys,
        "run", "--mode", "cache+prefetch",
        "--cache", "2048", "--fetch", "1024", "--threshold", "1024",
        "--num-samples", "60000", "--trials", "1",
        "--format", "json",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["cache_capacity"] == 2048
    assert doc["config"]["fetch_size"] == 1024
    assert doc["config"]["prefetch_threshold"] == 1024


def test_missing_config_file_exits_2(capsys):
    code, _, err = run_cli(capsys, "run", "--config", "no-such-file.json")
    assert code == 2
    assert "config error" in err


def test_invalid_config_exits_2(capsys):
    code, _, err = run_cli(
        capsys,
        "run", "--mode", "cache+prefetch", "--cache", "100", "--threshold", "100",
        "--num-samples", "1000", "--fetch", "10", "--trials", "1",
    )
    assert code == 2
    assert "prefetch_threshold must be < cache_capacity" in err


def test_config_file_with_flag_overrides(tmp_path, capsys):
    config = {
        "mode": "bucket-direct",
        "num_samples": 1000,
        "object_size_bytes": 512,
        "nodes": 2,
        "epochs": 1,
        "batch_size": 50,
        "fetch_size": 100,
        "prefetch_threshold": 0,
        "cache_capacity": 0,
        "trials": 1,
        "seed": 1,
    }
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(config))
    code, out, _ = run_cli(
        capsys, "run", "--config", str(path), "--nodes", "4", "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["config"]["nodes"] == 4  # flag wins
    assert doc["dataset"]["num_samples"] == 1000


def test_config_dir_env_resolution(tmp_path, capsys, monkeypatch):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"mode": "disk", "num_samples": 500, "epochs": 1,
                                "nodes": 1, "batch_size": 50, "fetch_size": 10,
                                "trials": 1, "cache_capacity": 0,
                                "prefetch_threshold": 0}))
    monkeypatch.setenv("BUCKETSIM_CONFIG_DIR", str(tmp_path))
    code, out, _ = run_cli(capsys, "run", "--config", "exp.json", "--format", "json")
    assert code == 0
    assert json.loads(out)["config"]["mode"] == "disk"


def test_rerun_from_echo_is_bit_identical(capsys):
    code, out, _ = run_cli(
        capsys, "run", "--mode", "cache+prefetch", *SMALL_FLAGS, "--format", "json"
    )
    assert code == 0
    doc = json.loads(out)
    merged = {**doc["config"], **doc["dataset"], **doc["latency"]}
    config, dataset, latency = experiment_from_dict(merged)
    again = run_experiment(config, dataset, latency)
    assert json.loads(again.to_json())["rows"] == doc["rows"]


def test_sweep_single_value_matches_run(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys,
        "sweep", "--axis", "fetch_size", "--values", "200",
        "--mode", "cache+prefetch", "--out", str(tmp_path / "sweep"), *SMALL_FLAGS,
    )
    assert code == 0
    code, _, _ = run_cli(
        capsys,
        "run", "--mode", "cache+prefetch", "--out", str(tmp_path / "run"), *SMALL_FLAGS,
    )
    assert code == 0
    sweep_csv = (tmp_path / "sweep" / "report_fetch_size=200.csv").read_text()
    run_csv = (tmp_path / "run" / "report.csv").read_text()
    assert sweep_csv == run_csv


def test_sweep_trend_summary(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys,
        "sweep", "--axis", "fetch_size", "--values", "100,200,400",
        "--mode", "cache+prefetch", "--format", "json",
        "--out", str(tmp_path), *SMALL_FLAGS,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["values"] == [100, 200, 400]
    assert "epoch0_miss_rate_non_increasing" in doc["verdicts"]
    assert (tmp_path / "trend_summary.json").exists()


def test_sweep_unknown_axis_exits_2(capsys):
    code, _, err = run_cli(
        capsys, "sweep", "--axis", "bogus", "--values", "1", *SMALL_FLAGS
    )
    assert code == 2
    assert "axis" in err


def test_cost_preset_table_and_json(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "cost", "--preset", "mnist")
    assert code == 0
    assert "Baseline (Disk)" in out
    code, out, _ = run_cli(
        capsys, "cost", "--preset", "cifar10", "--format", "json",
        "--out", str(tmp_path),
    )
    assert code == 0
    doc = json.loads(out)
    assert len(doc["rows"]) == 5
    assert (tmp_path / "cost_report.json").exists()


def test_cost_scenario_file(tmp_path, capsys):
    scenario = {
        "workload": "toy", "n": 1, "e": 1, "m": 100, "page_size": 10,
        "object_size_bytes": 100, "s_r_gb": 1.0,
        "c_c": 1.0, "c_d": 0.0, "c_b": 0.0,
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    code, out, _ = run_cli(capsys, "cost", "--scenario", str(path), "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert all(row["storage"] == 0.0 for row in rows)


def test_cost_without_inputs_exits_2(capsys):
    code, _, err = run_cli(capsys, "cost")
    assert code == 2
    assert "scenario" in err


def test_reconcile_command(capsys):
    code, out, _ = run_cli(
        capsys, "reconcile", "--mode", "bucket-direct", "--format", "json", *SMALL_FLAGS
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["class_a_matches"] is True
    assert doc["class_b_matches"] is True


def test_calibrate_prints_derived_model(capsys):
    code, out, _ = run_cli(capsys, "calibrate")
    assert code == 0
    doc = json.loads(out)
    expected = calibrate_object_store(1024)
    assert doc["object_store"]["per_request_overhead"] == pytest.approx(
        expected.per_request_overhead
    )
    assert doc["object_store"]["contention_per_worker"] == pytest.approx(
        expected.contention_per_worker
    )
    assert doc["disk"]["bandwidth_bytes_per_sec"] == pytest.approx(18.63e6)
