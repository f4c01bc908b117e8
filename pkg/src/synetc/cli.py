"""Command line entry points: run a comparison batch, analyze a log, render a report."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .attitude import ConfigError, load_config
from .experiments import (
    ExperimentConfig,
    emit_report,
    read_verdict_csv,
    run_comparison,
)
from .hybrid import MalformedLogError, analyze, domain_from_records, read_jump_log


def _cmd_run(args: argparse.Namespace) -> int:
    cfg_raw = load_config(args.config)
    exp_raw = cfg_raw.get("experiment", {})
    config = ExperimentConfig(
        params=cfg_raw["params"],
        triggers=tuple(cfg_raw["triggers"]),
        solver=cfg_raw["solver"],
        n_initial_conditions=int(exp_raw.get("n_initial_conditions", 20)),
        rng_seed=int(args.seed if args.seed is not None else exp_raw.get("rng_seed", 12345)),
        omega_bound=float(exp_raw.get("omega_bound", 2.0)),
        output_dir=Path(args.out if args.out is not None else exp_raw.get("output_dir", "out")),
        include_presets=bool(exp_raw.get("include_presets", True)),
        csv_stride=int(exp_raw.get("csv_stride", 10)),
    )
    verdicts, by_trigger = run_comparison(config, parallel=args.parallel)
    print(emit_report(verdicts), end="")
    failures = [
        res
        for runs in by_trigger.values()
        for res in runs
        if res.termination.value == "NumericalFailure"
    ]
    if failures:
        for res in failures:
            print(
                f"numerical failure: {res.trigger.kind}/{res.run_name}: "
                f"{res.result.termination.detail}",
                file=sys.stderr,
            )
        return 2
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    records, meta = read_jump_log(args.log)
    if args.horizon is not None:
        horizon = args.horizon
    elif "horizon" in meta:
        horizon = float(meta["horizon"])
    else:
        raise ConfigError("log carries no horizon metadata; pass --horizon")
    report = analyze(domain_from_records(records, horizon), records)
    if args.csv:
        print("delta_t,min_inter_transmission,has_dwell,dwell_tau,has_weak_dwell,transmissions,switches")
        print(
            f"{report.delta_t!r},{report.min_inter_transmission!r},{int(report.has_dwell)},"
            f"{report.dwell_tau!r},{int(report.has_weak_dwell)},"
            f"{report.transmission_count},{report.synergistic_count}"
        )
    else:
        print(report.as_text())
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    verdicts = []
    for path in args.verdicts:
        verdicts.extend(read_verdict_csv(path))
    print(emit_report(verdicts), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synetc",
        description="Event-triggered synergistic attitude control: batch runs and dwell analytics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a trigger-comparison batch from a config file")
    p_run.add_argument("config", type=Path, help="YAML parameter file")
    p_run.add_argument("--out", type=Path, default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    p_run.add_argument("--parallel", type=int, default=1, help="worker processes")
    p_run.set_defaults(func=_cmd_run)

    p_an = sub.add_parser("analyze", help="dwell report for one jump log")
    p_an.add_argument("log", type=Path, help="jump log file")
    p_an.add_argument("--horizon", type=float, default=None, help="end of the observation window")
    p_an.add_argument("--csv", action="store_true", help="emit CSV instead of text")
    p_an.set_defaults(func=_cmd_analyze)

    p_rep = sub.add_parser("report", help="render verdict CSVs as a comparison table")
    p_rep.add_argument("verdicts", type=Path, nargs="+", help="verdict CSV files")
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MalformedLogError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
