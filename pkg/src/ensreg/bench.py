"""Benchmark harness: run ensemble methods over datasets and report.

A run is fully determined by its config plus the global seed. Every cell
(dataset x method) derives its own seed by hashing (seed, dataset, method)
with SHA-256, so adding or removing a method never shifts anyone else's
randomness, and the train/test split of a dataset is shared by all methods
on it. A failed cell is recorded and skipped; ranking and significance are
computed over the datasets where every method succeeded.
"""

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from . import learners
from .dataset import load_csv, synth_generate, train_test_split
from .ensemble import fit_bagging, fit_dwr, fit_voting
from .errors import ConfigError, EnsregError, IoFailure
from .learners import LEARNER_KINDS, LearnerSpec
from .metrics import MetricReport
from .stats import ResultMatrix, posthoc_pairwise, rank_rows

METHODS = ("rrmse", "vru", "br", "dwr", "bem", "gem")
METRIC_NAMES = ("mae", "mse", "rmse", "r2")
REPORT_FORMATS = ("markdown", "csv", "json")

# Public sources for the benchmark datasets reported on in the literature.
# None are bundled; fetch them yourself and encode categorical columns as
# numbers before pointing a config at the CSV.
DATASET_REGISTRY = (
    {
        "name": "abalone",
        "rows": 4177,
        "columns": 8,
        "target": "rings",
        "url": "https://archive.ics.uci.edu/dataset/1/abalone",
        "notes": "encode the sex column numerically (e.g. M=0, F=1, I=2)",
    },
    {
        "name": "auto-mpg",
        "rows": 398,
        "columns": 7,
        "target": "mpg",
        "url": "https://archive.ics.uci.edu/dataset/9/auto+mpg",
        "notes": "drop or impute the 6 rows with missing horsepower",
    },
    {
        "name": "diamonds",
        "rows": 53940,
        "columns": 9,
        "target": "price",
        "url": "https://www.openml.org/d/42225",
        "notes": "ordinal-encode cut, color, and clarity",
    },
    {
        "name": "airfoil-self-noise",
        "rows": 1503,
        "columns": 5,
        "target": "scaled-sound-pressure",
        "url": "https://archive.ics.uci.edu/dataset/291/airfoil+self+noise",
        "notes": "tab-separated at the source; convert to CSV with a header",
    },
    {
        "name": "smart-grid-stability",
        "rows": 60000,
        "columns": 12,
        "target": "stab",
        "url": "https://archive.ics.uci.edu/dataset/540/simulated+electrical+grid+stability",
        "notes": "use the numeric stability column, not the binary label",
    },
    {
        "name": "elongation",
        "rows": 385,
        "columns": 17,
        "target": "elongation",
        "url": None,
        "notes": "proprietary materials dataset, not publicly available",
    },
)

# Six seeded synthetic datasets for a self-contained benchmark run.
SYNTHETIC_BENCHMARK = (
    {"name": "syn-linear-a", "synthetic": {"kind": "linear", "n": 400, "m": 6, "noise": 1.0, "seed": 11}},
    {"name": "syn-linear-b", "synthetic": {"kind": "linear", "n": 350, "m": 3, "noise": 1.2, "seed": 12}},
    {"name": "syn-linear-c", "synthetic": {"kind": "linear", "n": 500, "m": 10, "noise": 0.8, "seed": 17}},
    {"name": "syn-linear-d", "synthetic": {"kind": "linear", "n": 300, "m": 4, "noise": 0.6, "seed": 18}},
    {"name": "syn-friedman-a", "synthetic": {"kind": "friedman1", "n": 500, "m": 5, "noise": 1.0, "seed": 13}},
    {"name": "syn-piecewise-a", "synthetic": {"kind": "piecewise", "n": 450, "m": 4, "noise": 0.3, "seed": 15}},
)

_SYNTH_KEYS = {"kind", "n", "m", "noise", "seed"}


def stable_seed(*parts):
    """Deterministic 63-bit seed from the string forms of the parts.

    Uses SHA-256, not the builtin hash(), so the value is identical across
    processes and interpreter runs.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & ((1 << 63) - 1)


@dataclass(frozen=True)
class DatasetSpec:
    """One benchmark dataset: either a CSV on disk or a synthetic recipe."""

    name: str
    path: str = None
    target: str = None
    synthetic: dict = None

    def __post_init__(self):
        if not self.name:
            raise ConfigError("dataset entry needs a non-empty name")
        if self.synthetic is not None:
            if self.path is not None or self.target is not None:
                raise ConfigError(
                    f"dataset {self.name!r}: synthetic excludes path/target"
                )
            extra = set(self.synthetic) - _SYNTH_KEYS
            if extra:
                raise ConfigError(
                    f"dataset {self.name!r}: unknown synthetic keys {sorted(extra)}"
                )
            missing = _SYNTH_KEYS - set(self.synthetic)
            if missing:
                raise ConfigError(
                    f"dataset {self.name!r}: synthetic needs keys {sorted(missing)}"
                )
        elif self.path is None or self.target is None:
            raise ConfigError(
                f"dataset {self.name!r} needs either path+target or synthetic"
            )

    def load(self):
        if self.synthetic is not None:
            s = self.synthetic
            return synth_generate(s["kind"], s["n"], s["m"], s["noise"], s["seed"])
        return load_csv(self.path, self.target)

    def as_dict(self):
        if self.synthetic is not None:
            return {"name": self.name, "synthetic": dict(self.synthetic)}
        return {"name": self.name, "path": self.path, "target": self.target}


_CONFIG_KEYS = {
    "datasets",
    "methods",
    "seed",
    "test_fraction",
    "weight_source",
    "n_bags_per_spec",
    "k_nn",
    "pool",
    "workers",
}

_DEFAULT_POOL = ({"kind": "LR"}, {"kind": "KNN"}, {"kind": "SGD"}, {"kind": "RF"})


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a benchmark run depends on."""

    datasets: tuple
    methods: tuple
    seed: int = 0
    test_fraction: float = 0.2
    weight_source: str = "holdout"
    n_bags_per_spec: int = 5
    k_nn: int = 10
    pool: tuple = _DEFAULT_POOL
    workers: int = 1

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "datasets" not in d or "methods" not in d:
            raise ConfigError("config needs 'datasets' and 'methods'")
        datasets = tuple(
            ds if isinstance(ds, DatasetSpec) else DatasetSpec(**ds)
            for ds in d["datasets"]
        )
        pool = tuple(dict(p) for p in d.get("pool", _DEFAULT_POOL))
        return cls(
            datasets=datasets,
            methods=tuple(d["methods"]),
            seed=int(d.get("seed", 0)),
            test_fraction=float(d.get("test_fraction", 0.2)),
            weight_source=str(d.get("weight_source", "holdout")),
            n_bags_per_spec=int(d.get("n_bags_per_spec", 5)),
            k_nn=int(d.get("k_nn", 10)),
            pool=pool,
            workers=int(d.get("workers", 1)),
        )

    @classmethod
    def from_file(cls, path):
        if not os.path.isfile(path):
            raise ConfigError(f"no such config file: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    def validate(self):
        """Raise ConfigError on anything a run would trip over."""
        if not self.datasets:
            raise ConfigError("need at least one dataset")
        names = [ds.name for ds in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")
        if not self.methods:
            raise ConfigError("need at least one method")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must be unique")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.weight_source not in ("train", "holdout"):
            raise ConfigError(f"weight_source must be train or holdout, got {self.weight_source!r}")
        if self.n_bags_per_spec < 1:
            raise ConfigError("n_bags_per_spec must be >= 1")
        if self.k_nn < 1:
            raise ConfigError("k_nn must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.pool:
            raise ConfigError("pool must name at least one learner")
        for entry in self.pool:
            kind = entry.get("kind")
            if kind not in LEARNER_KINDS:
                raise ConfigError(f"pool entry kind must be one of {LEARNER_KINDS}, got {kind!r}")
            hp = {k: v for k, v in entry.items() if k != "kind"}
            try:
                LearnerSpec(kind, hp)
            except EnsregError as exc:
                raise ConfigError(f"bad pool entry {entry}: {exc}") from None
        for ds in self.datasets:
            if ds.path is not None and not os.path.isfile(ds.path):
                raise ConfigError(f"dataset {ds.name!r}: no such file {ds.path}")
            if ds.synthetic is not None:
                try:
                    synth_generate(
                        ds.synthetic["kind"], 4, 1, 0.0, ds.synthetic["seed"]
                    )
                except EnsregError as exc:
                    raise ConfigError(f"dataset {ds.name!r}: {exc}") from None
        return self

    def to_dict(self):
        return {
            "datasets": [ds.as_dict() for ds in self.datasets],
            "methods": list(self.methods),
            "seed": self.seed,
            "test_fraction": self.test_fraction,
            "weight_source": self.weight_source,
            "n_bags_per_spec": self.n_bags_per_spec,
            "k_nn": self.k_nn,
            "pool": [dict(p) for p in self.pool],
            "workers": self.workers,
        }


def synthetic_benchmark_config(seed=0, methods=("rrmse", "vru", "br", "dwr")):
    """Config over the six bundled synthetic datasets."""
    return ExperimentConfig.from_dict(
        {
            "datasets": [dict(d, synthetic=dict(d["synthetic"])) for d in SYNTHETIC_BENCHMARK],
            "methods": list(methods),
            "seed": seed,
        }
    )


def _pool_specs(pool, cell_seed):
    specs = []
    for i, entry in enumerate(pool):
        kind = entry["kind"]
        hp = {k: v for k, v in entry.items() if k != "kind"}
        specs.append(LearnerSpec(kind, hp, stable_seed(cell_seed, "member", i, kind)))
    return specs


def _run_cell(split, method, config, cell_seed):
    """Fit one method on one split and score it. Returns a MetricReport."""
    specs = _pool_specs(config.pool, cell_seed)
    if method == "vru":
        model = fit_voting(specs, split.train, "uniform")
    elif method == "bem":
        model = fit_voting(specs, split.train, "bem")
    elif method in ("rrmse", "gem"):
        model = fit_voting(
            specs,
            split.train,
            method,
            weight_source=config.weight_source,
            holdout_fraction=0.2,
            seed=stable_seed(cell_seed, "holdout"),
        )
    elif method == "br":
        model = fit_bagging(
            specs,
            split.train,
            n_bags_per_spec=config.n_bags_per_spec,
            seed=stable_seed(cell_seed, "bags"),
        )
    elif method == "dwr":
        model = fit_dwr(specs, split.train, k_nn=config.k_nn)
    else:
        raise ConfigError(f"unknown method {method!r}")
    preds = model.predict(split.test.features)
    return MetricReport.from_predictions(split.test.targets, preds)


def _cell_job(args):
    split, method, config, cell_seed = args
    start = time.perf_counter()
    try:
        report = _run_cell(split, method, config, cell_seed)
        return report, None, time.perf_counter() - start
    except EnsregError as exc:
        return None, f"{type(exc).__name__}: {exc}", time.perf_counter() - start


@dataclass
class ExperimentReport:
    """Run results in JSON-native form.

    ``timings`` is measurement noise, not an outcome: it is excluded from
    equality and from to_dict() so identical runs serialize identically.
    """

    config: dict
    cells: list
    errors: list
    tables: dict
    significance: dict
    timings: list = field(default_factory=list, compare=False)

    def to_dict(self):
        return {
            "config": self.config,
            "cells": self.cells,
            "errors": self.errors,
            "tables": self.tables,
            "significance": self.significance,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            config=d["config"],
            cells=d["cells"],
            errors=d["errors"],
            tables=d["tables"],
            significance=d["significance"],
        )


def run_experiment(config):
    """Execute every (dataset, method) cell and assemble the report."""
    config.validate()
    learners.warm_up()

    splits = {}
    cells = []
    errors = []
    timings = []
    jobs = []
    for ds in config.datasets:
        try:
            data = ds.load()
            split = train_test_split(
                data, config.test_fraction, stable_seed(config.seed, ds.name, "split")
            )
        except EnsregError as exc:
            for method in config.methods:
                errors.append(
                    {"dataset": ds.name, "method": method,
                     "error": f"{type(exc).__name__}: {exc}"}
                )
            continue
        splits[ds.name] = split
        for method in config.methods:
            jobs.append((ds.name, method))

    job_args = [
        (splits[ds_name], method, config, stable_seed(config.seed, ds_name, method))
        for ds_name, method in jobs
    ]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_cell_job, job_args))
    else:
        outcomes = [_cell_job(a) for a in job_args]

    results = {}
    for (ds_name, method), (report, error, seconds) in zip(jobs, outcomes):
        timings.append({"dataset": ds_name, "method": method, "seconds": seconds})
        if error is None:
            results[(ds_name, method)] = report
            cells.append(
                {"dataset": ds_name, "method": method,
                 "n_test": report.n, "metrics": report.as_dict()}
            )
        else:
            errors.append({"dataset": ds_name, "method": method, "error": error})

    complete = [
        ds.name
        for ds in config.datasets
        if ds.name in splits
        and all((ds.name, m) in results for m in config.methods)
    ]
    tables = {}
    significance = {}
    for metric in METRIC_NAMES:
        if not complete:
            break
        values = [
            [getattr(results[(d, m)], metric) for m in config.methods]
            for d in complete
        ]
        matrix = ResultMatrix(
            values,
            tuple(complete),
            tuple(config.methods),
            lower_is_better=(metric != "r2"),
        )
        ranked = rank_rows(matrix)
        tables[metric] = {
            "datasets": list(complete),
            "methods": list(config.methods),
            "values": [list(map(float, row)) for row in matrix.values],
            "ranks": [list(map(float, row)) for row in ranked.ranks],
            "average_ranks": [float(a) for a in ranked.average_ranks],
        }
        if len(config.methods) >= 2 and len(complete) >= 2:
            try:
                sig = posthoc_pairwise(matrix)
            except EnsregError:
                continue
            significance[metric] = {
                "statistic": sig.statistic,
                "p_value": sig.p_value,
                "pairs": [
                    {
                        "method_a": p.method_a,
                        "method_b": p.method_b,
                        "wins": p.wins,
                        "losses": p.losses,
                        "ties": p.ties,
                        "p_value": p.p_value,
                        "stars": p.stars,
                    }
                    for p in sig.pairs
                ],
            }

    return ExperimentReport(
        config=config.to_dict(),
        cells=cells,
        errors=errors,
        tables=tables,
        significance=significance,
        timings=timings,
    )


# --- rendering ---


def _fmt_value(v):
    return f"{v:.4f}" if abs(v) < 1e6 else f"{v:.6g}"


def _fmt_rank(r):
    return str(int(r)) if float(r).is_integer() else f"{r:g}"


def _fmt_p(p, star):
    text = f"{p:.4f}"
    return f"{star} {text}" if star else text


def render_markdown(report):
    lines = ["# Benchmark report", ""]
    methods = report.config["methods"]
    lines.append(f"Methods: {', '.join(methods)}. Seed: {report.config['seed']}.")
    lines.append("")
    for metric, table in report.tables.items():
        lines.append(f"## {metric}")
        lines.append("")
        lines.append("| dataset | " + " | ".join(table["methods"]) + " |")
        lines.append("|---" * (len(table["methods"]) + 1) + "|")
        for d, vals, ranks in zip(table["datasets"], table["values"], table["ranks"]):
            row = [
                f"{_fmt_value(v)} ({_fmt_rank(r)})" for v, r in zip(vals, ranks)
            ]
            lines.append(f"| {d} | " + " | ".join(row) + " |")
        avg = [f"{a:.4f}" for a in table["average_ranks"]]
        lines.append("| *average rank* | " + " | ".join(avg) + " |")
        lines.append("")
        sig = report.significance.get(metric)
        if sig is not None:
            lines.append(
                f"Omnibus: statistic {sig['statistic']:.4f}, "
                f"p {_fmt_p(sig['p_value'], '')}."
            )
            lines.append("")
            lines.append("| pair | win/lose/tie | p |")
            lines.append("|---|---|---|")
            for p in sig["pairs"]:
                lines.append(
                    f"| {p['method_a']} vs {p['method_b']} "
                    f"| {p['wins']}/{p['losses']}/{p['ties']} "
                    f"| {_fmt_p(p['p_value'], p['stars'])} |"
                )
            lines.append("")
    if report.errors:
        lines.append("## Failed cells")
        lines.append("")
        for e in report.errors:
            lines.append(f"- {e['dataset']} / {e['method']}: {e['error']}")
        lines.append("")
    return "\n".join(lines)


def _metrics_csv_rows(report):
    rank_of = {}
    for metric, table in report.tables.items():
        for d, ranks in zip(table["datasets"], table["ranks"]):
            for m, r in zip(table["methods"], ranks):
                rank_of[(d, m, metric)] = r
    rows = [["dataset", "method", "metric", "value", "rank"]]
    for cell in report.cells:
        for metric in METRIC_NAMES:
            r = rank_of.get((cell["dataset"], cell["method"], metric))
            rows.append(
                [
                    cell["dataset"],
                    cell["method"],
                    metric,
                    repr(cell["metrics"][metric]),
                    "" if r is None else _fmt_rank(r),
                ]
            )
    return rows


def _significance_csv_rows(report):
    rows = [["metric", "method_a", "method_b", "wins", "losses", "ties", "p_value", "stars"]]
    for metric, sig in report.significance.items():
        for p in sig["pairs"]:
            rows.append(
                [
                    metric,
                    p["method_a"],
                    p["method_b"],
                    str(p["wins"]),
                    str(p["losses"]),
                    str(p["ties"]),
                    repr(p["p_value"]),
                    p["stars"],
                ]
            )
    return rows


def emit_report(report, out_dir, formats=REPORT_FORMATS):
    """Write the requested report files into out_dir.

    markdown -> report.md; csv -> metrics.csv, significance.csv, and
    timings.csv when timings exist; json -> report.json. Returns the list
    of paths written.
    """
    bad = [f for f in formats if f not in REPORT_FORMATS]
    if bad:
        raise ConfigError(f"unknown formats {bad}; choose from {REPORT_FORMATS}")
    written = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        if "markdown" in formats:
            path = os.path.join(out_dir, "report.md")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(render_markdown(report))
            written.append(path)
        if "csv" in formats:
            import csv as _csv

            for fname, rows in (
                ("metrics.csv", _metrics_csv_rows(report)),
                ("significance.csv", _significance_csv_rows(report)),
            ):
                path = os.path.join(out_dir, fname)
                with open(path, "w", newline="", encoding="utf-8") as fh:
                    _csv.writer(fh).writerows(rows)
                written.append(path)
            if report.timings:
                path = os.path.join(out_dir, "timings.csv")
                with open(path, "w", newline="", encoding="utf-8") as fh:
                    w = _csv.writer(fh)
                    w.writerow(["dataset", "method", "seconds"])
                    for t in report.timings:
                        w.writerow([t["dataset"], t["method"], f"{t['seconds']:.6f}"])
                written.append(path)
        if "json" in formats:
            path = os.path.join(out_dir, "report.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=2)
                fh.write("\n")
            written.append(path)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out_dir}: {exc}") from None
    return written
