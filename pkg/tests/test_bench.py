import json
import os

import numpy as np
import pytest

from ensreg.bench import (
    DATASET_REGISTRY,
    METHODS,
    DatasetSpec,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    run_experiment,
    stable_seed,
    synthetic_benchmark_config,
)
from ensreg.cli import main as cli_main
from ensreg.dataset import load_csv
from ensreg.errors import ConfigError

FAST_POOL = [
    {"kind": "LR"},
    {"kind": "KNN", "k": 3},
    {"kind": "SGD", "epochs": 40},
    {"kind": "RF", "n_trees": 8},
]


def _config(methods=("rrmse", "vru"), n_datasets=2, **over):
    datasets = [
        {"name": f"syn{i}",
         "synthetic": {"kind": "linear", "n": 70, "m": 3, "noise": 0.8, "seed": i}}
        for i in range(n_datasets)
    ]
    base = {"datasets": datasets, "methods": list(methods), "seed": 5, "pool": FAST_POOL}
    base.update(over)
    return ExperimentConfig.from_dict(base)


def test_stable_seed_properties():
    a = stable_seed(1, "abalone", "rrmse")
    assert a == stable_seed(1, "abalone", "rrmse")  # same every process
    assert a != stable_seed(1, "abalone", "vru")
    assert a != stable_seed(2, "abalone", "rrmse")
    assert 0 <= a < 2**63


def test_dataset_spec_validation():
    DatasetSpec("a", path="x.csv", target="y")
    DatasetSpec("a", synthetic={"kind": "linear", "n": 10, "m": 2, "noise": 0.0, "seed": 1})
    with pytest.raises(ConfigError):
        DatasetSpec("a")  # neither source
    with pytest.raises(ConfigError):
        DatasetSpec("a", path="x.csv", target="y",
                    synthetic={"kind": "linear", "n": 10, "m": 2, "noise": 0.0, "seed": 1})
    with pytest.raises(ConfigError):
        DatasetSpec("a", synthetic={"kind": "linear"})
    with pytest.raises(ConfigError):
        DatasetSpec("", path="x.csv", target="y")


def test_config_validation():
    with pytest.raises(ConfigError):
        _config(methods=("rrmse", "blend")).validate()
    with pytest.raises(ConfigError):
        _config(methods=()).validate()
    with pytest.raises(ConfigError):
        _config(test_fraction=1.5).validate()
    with pytest.raises(ConfigError):
        _config(weight_source="test").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"datasets": [], "methods": ["vru"]}).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"methods": ["vru"]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(
            {"datasets": [{"name": "a", "path": "/nope.csv", "target": "y"}],
             "methods": ["vru"]}
        ).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"datasets": [], "methods": ["vru"], "typo": 1})
    cfg = _config(pool=[{"kind": "KNN", "k": 0}])
    with pytest.raises(ConfigError):
        cfg.validate()
    _config().validate()


def test_run_minimal_single_method():
    cfg = _config(methods=("vru",), n_datasets=1)
    rep = run_experiment(cfg)
    assert len(rep.cells) == 1
    assert rep.errors == []
    cell = rep.cells[0]
    assert set(cell["metrics"]) == {"mae", "mse", "rmse", "r2"}
    assert cell["n_test"] == 14  # ceil(70 * 0.2)
    # one method: rank tables exist, significance needs two methods
    assert rep.tables["mae"]["average_ranks"] == [1.0]
    assert rep.significance == {}


def test_run_full_coverage_and_determinism():
    cfg = _config(methods=("rrmse", "vru", "br", "dwr", "bem", "gem"), n_datasets=2)
    rep = run_experiment(cfg)
    assert len(rep.cells) == 12
    assert rep.errors == []
    seen = {(c["dataset"], c["method"]) for c in rep.cells}
    assert len(seen) == 12
    for metric in ("mae", "mse", "rmse", "r2"):
        assert metric in rep.tables
        assert metric in rep.significance
        assert len(rep.significance[metric]["pairs"]) == 15
    rep2 = run_experiment(cfg)
    assert rep == rep2
    assert json.dumps(rep.to_dict()) == json.dumps(rep2.to_dict())


def test_cell_seeds_stable_under_method_set_changes():
    small = run_experiment(_config(methods=("vru",), n_datasets=2))
    big = run_experiment(_config(methods=("rrmse", "vru", "br"), n_datasets=2))
    vals_small = {
        (c["dataset"], c["method"]): c["metrics"] for c in small.cells
    }
    vals_big = {
        (c["dataset"], c["method"]): c["metrics"] for c in big.cells
    }
    for key, metrics in vals_small.items():
        assert vals_big[key] == metrics


def test_mse_and_rmse_ranks_identical():
    cfg = _config(methods=("rrmse", "vru", "br", "dwr"), n_datasets=3)
    rep = run_experiment(cfg)
    assert rep.tables["mse"]["ranks"] == rep.tables["rmse"]["ranks"]


def test_failed_cell_recorded_run_continues(tmp_path):
    # 6 rows: the 80/20 holdout split inside rrmse weighting cannot give
    # both sides two rows, so that cell fails while vru succeeds
    path = tmp_path / "tiny.csv"
    lines = ["a,b,y"] + [f"{i},{i * 2},{i * 3}" for i in range(6)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    cfg = ExperimentConfig.from_dict(
        {
            "datasets": [{"name": "tiny", "path": str(path), "target": "y"}],
            "methods": ["rrmse", "vru"],
            "pool": [{"kind": "LR"}, {"kind": "KNN", "k": 2}],
            "test_fraction": 0.4,
            "weight_source": "holdout",
        }
    )
    rep = run_experiment(cfg)
    assert len(rep.errors) == 1
    assert rep.errors[0]["method"] == "rrmse"
    assert "TooFewRows" in rep.errors[0]["error"]
    assert len(rep.cells) == 1
    # no complete dataset -> no rank tables
    assert rep.tables == {}


def test_json_round_trip():
    rep = run_experiment(_config())
    text = json.dumps(rep.to_dict())
    parsed = json.loads(text)
    assert parsed == rep.to_dict()
    assert ExperimentReport.from_dict(parsed) == rep


def test_emit_report_files(tmp_path):
    rep = run_experiment(_config(methods=("rrmse", "vru", "dwr")))
    out = str(tmp_path / "out")
    written = emit_report(rep, out)
    names = {os.path.basename(p) for p in written}
    assert names == {"report.md", "metrics.csv", "significance.csv",
                     "timings.csv", "report.json"}
    md = open(os.path.join(out, "report.md"), encoding="utf-8").read()
    assert "(1)" in md  # value-with-rank cells
    assert "## mae" in md
    with open(os.path.join(out, "metrics.csv"), encoding="utf-8") as fh:
        rows = fh.read().strip().split("\n")
    assert rows[0] == "dataset,method,metric,value,rank"
    assert len(rows) == 1 + 2 * 3 * 4  # datasets x methods x metrics
    with open(os.path.join(out, "significance.csv"), encoding="utf-8") as fh:
        sig_rows = fh.read().strip().split("\n")
    assert sig_rows[0] == "metric,method_a,method_b,wins,losses,ties,p_value,stars"
    assert len(sig_rows) == 1 + 4 * 3  # metrics x pairs
    with pytest.raises(ConfigError):
        emit_report(rep, out, formats=("pdf",))


def test_markdown_significance_formatting(tmp_path):
    rep = run_experiment(_config(methods=("rrmse", "vru", "br", "dwr"), n_datasets=3))
    out = str(tmp_path / "md")
    emit_report(rep, out, formats=("markdown",))
    md = open(os.path.join(out, "report.md"), encoding="utf-8").read()
    assert "Omnibus" in md
    assert "win/lose/tie" in md


def test_synthetic_benchmark_config_valid():
    cfg = synthetic_benchmark_config(seed=3)
    cfg.validate()
    assert len(cfg.datasets) == 6
    assert cfg.methods == ("rrmse", "vru", "br", "dwr")
    assert cfg.seed == 3


def test_registry_covers_reported_datasets():
    names = {e["name"] for e in DATASET_REGISTRY}
    assert {"abalone", "auto-mpg", "diamonds", "airfoil-self-noise",
            "smart-grid-stability", "elongation"} <= names
    public = [e for e in DATASET_REGISTRY if e["url"]]
    assert len(public) == 5


def test_methods_vocabulary():
    assert METHODS == ("rrmse", "vru", "br", "dwr", "bem", "gem")


# --- command line ---


def test_cli_synth_and_validate_and_run(tmp_path, capsys):
    csv_path = str(tmp_path / "gen.csv")
    assert cli_main(["synth", "--kind", "piecewise", "--n", "80", "--m", "3",
                     "--noise", "0.2", "--seed", "4", "--out", csv_path]) == 0
    d = load_csv(csv_path, "y")
    assert d.n == 80 and d.m == 3

    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "datasets": [{"name": "gen", "path": csv_path, "target": "y"}],
                "methods": ["rrmse", "vru"],
                "seed": 9,
                "pool": FAST_POOL,
            },
            fh,
        )
    assert cli_main(["validate", "--config", cfg_path]) == 0

    out_dir = str(tmp_path / "cli_out")
    assert cli_main(["run", "--config", cfg_path, "--out", out_dir,
                     "--format", "json", "--format", "csv"]) == 0
    assert os.path.isfile(os.path.join(out_dir, "report.json"))
    assert os.path.isfile(os.path.join(out_dir, "metrics.csv"))
    assert not os.path.isfile(os.path.join(out_dir, "report.md"))
    capsys.readouterr()


def test_cli_validate_rejects_bad_config(tmp_path, capsys):
    cfg_path = str(tmp_path / "bad.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump({"datasets": [], "methods": ["vru"]}, fh)
    assert cli_main(["validate", "--config", cfg_path]) == 1
    assert cli_main(["validate", "--config", str(tmp_path / "absent.json")]) == 1
    err = capsys.readouterr().err
    assert "error:" in err


def test_cli_run_partial_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "tiny.csv"
    lines = ["a,y"] + [f"{i},{i * 2}" for i in range(6)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "datasets": [{"name": "tiny", "path": str(path), "target": "y"}],
                "methods": ["rrmse", "vru"],
                "pool": [{"kind": "LR"}, {"kind": "KNN", "k": 2}],
                "test_fraction": 0.4,
            },
            fh,
        )
    out_dir = str(tmp_path / "out")
    code = cli_main(["run", "--config", cfg_path, "--out", out_dir])
    assert code == 2
    # report still written despite the failed cell
    assert os.path.isfile(os.path.join(out_dir, "report.json"))
    with open(os.path.join(out_dir, "report.json"), encoding="utf-8") as fh:
        rep = json.load(fh)
    assert len(rep["errors"]) == 1
    capsys.readouterr()


def test_cli_seed_override(tmp_path, capsys):
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "datasets": [{"name": "s",
                              "synthetic": {"kind": "linear", "n": 60, "m": 2,
                                            "noise": 0.5, "seed": 1}}],
                "methods": ["vru"],
                "seed": 1,
                "pool": [{"kind": "LR"}, {"kind": "KNN", "k": 3}],
            },
            fh,
        )
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert cli_main(["run", "--config", cfg_path, "--out", out_a,
                     "--format", "json"]) == 0
    assert cli_main(["run", "--config", cfg_path, "--out", out_b,
                     "--format", "json", "--seed", "77"]) == 0
    rep_a = json.load(open(os.path.join(out_a, "report.json"), encoding="utf-8"))
    rep_b = json.load(open(os.path.join(out_b, "report.json"), encoding="utf-8"))
    assert rep_a["config"]["seed"] == 1
    assert rep_b["config"]["seed"] == 77
    # a different seed changes the split, hence the metrics
    assert rep_a["cells"][0]["metrics"] != rep_b["cells"][0]["metrics"]
    capsys.readouterr()


def test_workers_parallel_matches_serial():
    cfg_serial = _config(methods=("rrmse", "vru"), n_datasets=2, workers=1)
    cfg_par = _config(methods=("rrmse", "vru"), n_datasets=2, workers=2)
    a = run_experiment(cfg_serial)
    b = run_experiment(cfg_par)
    assert a.cells == b.cells
    assert a.to_dict()["tables"] == b.to_dict()["tables"]
