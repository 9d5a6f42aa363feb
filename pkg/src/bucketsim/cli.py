"""Command-line front end: run, sweep, cost, reconcile, calibrate.

Exit codes: 0 success, 1 runtime failure, 2 config error. Every invocation
echoes its effective configuration so results can be reproduced exactly.
Bare config names resolve against $BUCKETSIM_CONFIG_DIR when not found
relative to the working directory.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import presets
from .core import (
    DatasetSpec,
    ExperimentConfig,
    load_flat_config,
    validate_config,
)
from .costs import present, reconcile, run_cost_scenario
from .harness import (
    experiment_from_dict,
    regression_loading_time_vs_missrate,
    run_experiment,
    run_sweep,
)
from .store import calibrate_disk, calibrate_object_store

CONFIG_DIR_ENV = "BUCKETSIM_CONFIG_DIR"

_FLAG_TO_KEY = {
    "mode": "mode",
    "nodes": "nodes",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "fetch": "fetch_size",
    "threshold": "prefetch_threshold",
    "cache": "cache_capacity",
    "workers": "parallel_fetch_workers",
    "page_size": "page_size",
    "compute_time_per_batch": "compute_time_per_batch",
    "trials": "trials",
    "seed": "seed",
    "num_samples": "num_samples",
    "object_size_bytes": "object_size_bytes",
    "list_latency": "list_latency",
}


class ConfigurationError(Exception):
    pass


def _resolve_config_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    config_dir = os.environ.get(CONFIG_DIR_ENV)
    if config_dir:
        candidate = Path(config_dir) / name
        if candidate.exists():
            return candidate
    raise ConfigurationError(f"config file not found: {name}")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat JSON config file")
    parser.add_argument(
        "--preset", choices=list(presets.WORKLOADS), help="bundled workload preset"
    )
    parser.add_argument(
        "--out", default="bucketsim-out", help="directory for report files"
    )
    parser.add_argument(
        "--format", choices=("table", "json"), default="table", dest="fmt"
    )
    parser.add_argument("--mode")
    parser.add_argument("--nodes", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--fetch", type=int, help="fetch size")
    parser.add_argument("--threshold", type=int, help="pre-fetch threshold")
    parser.add_argument("--cache", type=int, help="cache capacity in samples")
    parser.add_argument("--workers", type=int, help="parallel fetch workers")
    parser.add_argument("--page-size", type=int, dest="page_size")
    parser.add_argument(
        "--compute-time-per-batch", type=float, dest="compute_time_per_batch"
    )
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--num-samples", type=int, dest="num_samples")
    parser.add_argument("--object-size-bytes", type=int, dest="object_size_bytes")
    parser.add_argument(
        "--list-latency", type=float, dest="list_latency", help="seconds per page"
    )


def _effective_doc(args) -> dict:
    doc: dict = {}
    if args.preset:
        config = presets.experiment(args.preset)
        ds = presets.dataset(args.preset)
        doc.update(dataclasses.asdict(config))
        doc["num_samples"] = ds.num_samples
        doc["object_size_bytes"] = ds.object_size_bytes
    if args.config:
        doc.update(load_flat_config(_resolve_config_path(args.config)))
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[key] = value
    return doc


def _load_experiment(args) -> tuple[ExperimentConfig, DatasetSpec, object, dict]:
    doc = _effective_doc(args)
    config, dataset, latency = experiment_from_dict(doc)
    violations = validate_config(config, dataset)
    if violations:
        raise ConfigurationError("invalid config:\n  " + "\n  ".join(violations))
    return config, dataset, latency, doc


def _echo_config(doc: dict) -> None:
    print("effective config:")
    print(json.dumps(doc, sort_keys=True, indent=2))


def _write_report(report, out_dir: Path, stem: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{stem}.csv").write_text(report.to_csv())
    (out_dir / f"{stem}.json").write_text(report.to_json())


def _print_summary(report) -> None:
    agg = report.aggregates()
    print("epoch  miss_rate  loading_s  compute_s")
    for epoch, vals in agg["per_epoch"].items():
        print(
            f"{epoch:>5}  {vals['miss_rate']:9.4f}  "
            f"{vals['data_loading_time']:9.2f}  {vals['compute_time']:9.2f}"
        )
    ledger = agg["ledger"]
    print(
        f"ledger: class_a={ledger['class_a']} class_b={ledger['class_b']} "
        f"bytes={ledger['bytes_fetched']}"
    )
    if report.job_errors:
        print(f"job errors: {len(report.job_errors)}")
        for err in report.job_errors[:5]:
            print(f"  {err}")


def cmd_run(args) -> int:
    config, dataset, latency, doc = _load_experiment(args)
    report = run_experiment(config, dataset, latency)
    if args.fmt == "json":
        print(report.to_json())
    else:
        _echo_config(doc)
        _print_summary(report)
    if args.out:
        _write_report(report, Path(args.out), "report")
    return 0


def cmd_sweep(args) -> int:
    config, dataset, latency, doc = _load_experiment(args)
    values = [_parse_axis_value(args.axis, v) for v in args.values.split(",") if v]
    reports = run_sweep(config, dataset, args.axis, values, latency)
    series = {
        "axis": args.axis,
        "values": values,
        "per_epoch_miss_rate": {},
        "verdicts": {},
    }
    epochs = sorted({row.epoch for row in reports[0].rows})
    for epoch in epochs:
        rates = [r.epoch_aggregate("miss_rate", epoch) for r in reports]
        series["per_epoch_miss_rate"][str(epoch)] = rates
        ok = all(b <= a + 1e-12 for a, b in zip(rates, rates[1:]))
        series["verdicts"][f"epoch{epoch}_miss_rate_non_increasing"] = (
            "pass" if ok else "fail"
        )
    fit = regression_loading_time_vs_missrate(reports)
    series["loading_vs_missrate"] = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "degenerate": fit.degenerate,
    }
    if args.fmt == "json":
        print(json.dumps(series, sort_keys=True, indent=2))
    else:
        _echo_config(doc)
        for epoch in epochs:
            rates = series["per_epoch_miss_rate"][str(epoch)]
            verdict = series["verdicts"][f"epoch{epoch}_miss_rate_non_increasing"]
            print(f"epoch {epoch} miss rates along {args.axis}:")
            for value, rate in zip(values, rates):
                print(f"  {args.axis}={value}: {rate:.4f}")
            print(f"  non-increasing: {verdict}")
        if not fit.degenerate:
            print(
                f"loading vs miss rate: slope={fit.slope:.3f} "
                f"r^2={fit.r_squared:.6f}"
            )
    if args.out:
        out = Path(args.out)
        for value, report in zip(values, reports):
            _write_report(report, out, f"report_{args.axis}={value}")
        out.mkdir(parents=True, exist_ok=True)
        (out / "trend_summary.json").write_text(
            json.dumps(series, sort_keys=True, indent=2)
        )
    return 0


def _parse_axis_value(axis: str, raw: str):
    for field in dataclasses.fields(ExperimentConfig):
        if field.name == axis:
            if field.type in ("int", int):
                return int(raw)
            if field.type in ("float", float):
                return float(raw)
            if field.type in ("bool", bool):
                return raw.lower() in ("1", "true", "yes")
            return raw
    raise ConfigurationError(f"unknown sweep axis: {axis!r}")


def cmd_cost(args) -> int:
    if args.scenario:
        scenario = load_flat_config(_resolve_config_path(args.scenario))
    elif args.preset:
        scenario = presets.cost_scenario(args.preset)
    else:
        raise ConfigurationError("cost requires --scenario or --preset")
    rows = run_cost_scenario(scenario)
    if args.fmt == "json":
        print(json.dumps({"scenario": scenario, "rows": rows}, sort_keys=True, indent=2))
    else:
        print(f"workload: {scenario.get('workload', 'custom')}")
        header = f"{'method':<28} {'api':>8} {'storage':>8} {'comp+load':>10} {'total':>8}"
        print(header)
        for row in rows:
            print(
                f"{row['method']:<28} {present(row['api'], 2):>8} "
                f"{present(row['storage'], 2):>8} "
                f"{present(row['compute_loading'], 2):>10} "
                f"{present(row['total'], 2):>8}"
            )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "cost_report.json").write_text(
            json.dumps({"scenario": scenario, "rows": rows}, sort_keys=True, indent=2)
        )
    return 0


def cmd_reconcile(args) -> int:
    config, dataset, latency, doc = _load_experiment(args)
    report = run_experiment(config, dataset, latency)
    rec = reconcile(report)
    doc_out = {
        "mode": rec.mode,
        "observed_class_a": rec.observed_class_a,
        "observed_class_b": rec.observed_class_b,
        "predicted": rec.predicted,
        "class_a_matches": rec.class_a_matches,
        "class_b_matches": rec.class_b_matches,
        "notes": list(rec.notes),
    }
    if args.fmt == "json":
        print(json.dumps(doc_out, sort_keys=True, indent=2))
    else:
        _echo_config(doc)
        for key, value in doc_out.items():
            print(f"{key}: {value}")
    return 0


def cmd_calibrate(args) -> int:
    bucket = calibrate_object_store(
        object_size_bytes=args.object_size_bytes,
        sequential_bytes_per_sec=args.sequential_kbps * 1000.0,
        parallel_bytes_per_sec=args.parallel_kbps * 1000.0,
        parallel_workers=args.workers,
        overhead_fraction=args.overhead_fraction,
        list_latency=args.list_latency,
    )
    disk = calibrate_disk(args.disk_mbps * 1e6)
    doc = {"object_store": bucket.to_dict(), "disk": disk.to_dict()}
    print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bucketsim",
        description="Simulate cache+prefetch training-data loading from "
        "object storage and model its cloud cost.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--axis", required=True, help="config field to sweep")
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated axis values"
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_cost = sub.add_parser("cost", help="evaluate a cost scenario")
    p_cost.add_argument("--scenario", help="flat JSON scenario file")
    p_cost.add_argument(
        "--preset", choices=list(presets.WORKLOADS), help="bundled cost scenario"
    )
    p_cost.add_argument("--out", help="directory for cost_report.json")
    p_cost.add_argument(
        "--format", choices=("table", "json"), default="table", dest="fmt"
    )
    p_cost.set_defaults(func=cmd_cost)

    p_rec = sub.add_parser(
        "reconcile", help="run an experiment and reconcile its ledger"
    )
    _add_run_flags(p_rec)
    p_rec.set_defaults(func=cmd_reconcile)

    p_cal = sub.add_parser(
        "calibrate", help="derive latency-model defaults from throughput targets"
    )
    p_cal.add_argument("--object-size-bytes", type=int, default=1024)
    p_cal.add_argument("--sequential-kbps", type=float, default=49.80)
    p_cal.add_argument("--parallel-kbps", type=float, default=281.73)
    p_cal.add_argument("--workers", type=int, default=16)
    p_cal.add_argument("--overhead-fraction", type=float, default=0.7)
    p_cal.add_argument("--list-latency", type=float, default=0.010)
    p_cal.add_argument("--disk-mbps", type=float, default=18.63)
    p_cal.set_defaults(func=cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        message = str(exc)
        print(f"config error: {message}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
