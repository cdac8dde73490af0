"""Command line entry point.

    bench run --config cfg.json [--seed N] [--out DIR] [--format F ...]
              [--workers N]
    bench validate --config cfg.json
    bench synth --kind linear --n 500 --m 5 --noise 1.0 --seed 7 --out d.csv
    bench datasets

Exit codes: 0 on success, 1 on a hard failure (bad arguments, unreadable
config, I/O), 2 when the run finished but some cells failed (the report is
still written).
"""

import argparse
import dataclasses
import sys

from .bench import (
    DATASET_REGISTRY,
    REPORT_FORMATS,
    ExperimentConfig,
    emit_report,
    run_experiment,
)
from .dataset import SYNTH_KINDS, synth_generate, write_csv
from .errors import EnsregError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bench", description="ensemble regression benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark config and write reports")
    run_p.add_argument("--config", required=True, help="path to a JSON config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default="bench_out", help="output directory")
    run_p.add_argument(
        "--format",
        action="append",
        choices=REPORT_FORMATS,
        default=None,
        help="report format, repeatable (default: all)",
    )
    run_p.add_argument(
        "--workers", type=int, default=None, help="override config worker count"
    )

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("--config", required=True, help="path to a JSON config")

    syn_p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    syn_p.add_argument("--kind", required=True, choices=SYNTH_KINDS)
    syn_p.add_argument("--n", type=int, required=True, help="number of rows")
    syn_p.add_argument("--m", type=int, required=True, help="number of features")
    syn_p.add_argument("--noise", type=float, default=0.0, help="noise std dev")
    syn_p.add_argument("--seed", type=int, default=0)
    syn_p.add_argument("--out", required=True, help="CSV path to write")

    sub.add_parser("datasets", help="list public sources for benchmark datasets")
    return parser


def _cmd_run(args):
    config = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = dataclasses.replace(config, **overrides)
    config.validate()
    report = run_experiment(config)
    formats = tuple(dict.fromkeys(args.format)) if args.format else REPORT_FORMATS
    written = emit_report(report, args.out, formats)
    for path in written:
        print(path)
    if report.errors:
        for e in report.errors:
            print(
                f"cell failed: {e['dataset']} / {e['method']}: {e['error']}",
                file=sys.stderr,
            )
        return 2
    return 0


def _cmd_validate(args):
    ExperimentConfig.from_file(args.config).validate()
    print(f"{args.config}: ok")
    return 0


def _cmd_synth(args):
    data = synth_generate(args.kind, args.n, args.m, args.noise, args.seed)
    write_csv(data, args.out)
    print(f"{args.out}: {data.n} rows, {data.m} features")
    return 0


def _cmd_datasets(_args):
    for entry in DATASET_REGISTRY:
        source = entry["url"] or "not publicly available"
        print(f"{entry['name']}: {entry['rows']} rows, {entry['columns']} columns")
        print(f"  target: {entry['target']}")
        print(f"  source: {source}")
        print(f"  notes:  {entry['notes']}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "synth": _cmd_synth,
    "datasets": _cmd_datasets,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except EnsregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
