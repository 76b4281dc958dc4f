"""End-to-end pipeline runs through the command-line entry point: artifact
inventory, byte determinism, staleness detection, and exit-code mapping."""

import json
import shutil
import subprocess
import sys
from pathlib import Path
from xml.dom import minidom

import numpy as np
import pytest

from srr.cli import main
from srr.models import deserialize, parameter_count
from srr.synthetic import write_synthetic_csv

MODEL_KINDS = ("logistic", "forest", "gcn", "temporal")

EXPECTED_ARTIFACTS = (
    ["prices.csv", "provenance.json", "universe.json",
     "features.csv", "graph_labels.csv", "standardization.json", "split.json",
     "graphs.jsonl", "report.json", "summary.txt",
     "roc.svg", "pr.svg", "risk_timeline.svg", "lead_times.svg",
     "feature_importance.svg"]
    + [f"model_{k}.srrm" for k in MODEL_KINDS]
    + [f"training_log_{k}.json" for k in MODEL_KINDS]
    + [f"timeline_{k}.csv" for k in MODEL_KINDS]
    + [f"manifest_{stage}.json"
       for stage in ("ingest", "features", "graphs", "train", "evaluate", "report")]
)

COMPARABLE = [name for name in EXPECTED_ARTIFACTS
              if not name.startswith("manifest_")]  # manifests hash the out paths


def make_workspace(root: Path, seed=7, out_name="out", n_days=400) -> tuple[str, Path]:
    prices = root / "prices.csv"
    if not prices.exists():
        write_synthetic_csv(str(prices), n_tickers=10, n_days=n_days, seed=21)
    out = root / out_name
    cfg = {
        "data": {"prices_csv": str(prices)},
        "labels": {"threshold": 0.10, "horizon": 20},
        "model": {
            "kinds": list(MODEL_KINDS),
            "gcn_hidden": 6, "mlp_hidden": 4, "gru_hidden": 6,
            "sequence_length": 2, "stride": 2, "epochs": 2, "batch_size": 8,
            "forest_trees": 5, "forest_max_depth": 3, "logistic_epochs": 200,
        },
        "seed": seed,
        "out": str(out),
    }
    cfg_path = root / f"config_{out_name}_{seed}.json"
    cfg_path.write_text(json.dumps(cfg, indent=2))
    return str(cfg_path), out


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg_path, out = make_workspace(root)
    rc = main(["run-all", "--config", cfg_path])
    assert rc == 0
    return {"root": root, "config": cfg_path, "out": out}


class TestRunAll:
    def test_every_artifact_exists(self, pipeline):
        missing = [n for n in EXPECTED_ARTIFACTS
                   if not (pipeline["out"] / n).exists()]
        assert missing == []

    def test_report_is_consistent_with_model_files(self, pipeline):
        report = json.loads((pipeline["out"] / "report.json").read_text())
        assert "out" not in report["config"]
        assert set(report["models"]) == set(MODEL_KINDS)
        for kind in MODEL_KINDS:
            blob = (pipeline["out"] / f"model_{kind}.srrm").read_bytes()
            state = deserialize(blob)
            assert state.kind == kind
            assert state.config_hash == report["config_hash"]
            entry = report["models"][kind]
            assert entry["parameter_count"] == parameter_count(state)
            assert 0 < entry["metrics"]["n"]
            assert entry["metrics"]["tp"] + entry["metrics"]["fp"] \
                + entry["metrics"]["tn"] + entry["metrics"]["fn"] == entry["metrics"]["n"]
        assert "feature_importance" in report["models"]["forest"]

    def test_timelines_are_parsable_and_bounded(self, pipeline):
        for kind in MODEL_KINDS:
            lines = (pipeline["out"] / f"timeline_{kind}.csv").read_text().splitlines()
            assert lines[0] == "date,score,label"
            assert len(lines) > 1
            for row in lines[1:]:
                date, score, label = row.split(",")
                assert len(date) == 10 and date[4] == date[7] == "-"
                assert 0.0 <= float(score) <= 1.0
                assert label in ("0", "1")

    def test_split_has_horizon_gap(self, pipeline):
        split = json.loads((pipeline["out"] / "split.json").read_text())
        assert split["horizon"] == 20
        assert max(split["train_dates"]) < min(split["test_dates"])
        features = (pipeline["out"] / "features.csv").read_text().splitlines()
        feature_dates = sorted({row.split(",")[0] for row in features[1:]})
        boundary = feature_dates.index(split["test_dates"][0])
        assert len(split["train_dates"]) == boundary - 20

    def test_graphs_header_records_run_identity(self, pipeline):
        header = json.loads(
            (pipeline["out"] / "graphs.jsonl").read_text().splitlines()[0])
        report = json.loads((pipeline["out"] / "report.json").read_text())
        assert header["format"] == "srr-graph-v1"
        assert header["config_hash"] == report["config_hash"]
        assert header["seed"] == 7
        assert header["window"] == 7 and header["tau"] == 0.5

    def test_manifest_output_hashes_verify(self, pipeline):
        import hashlib
        for stage in ("ingest", "features", "graphs", "train", "evaluate", "report"):
            manifest = json.loads(
                (pipeline["out"] / f"manifest_{stage}.json").read_text())
            assert manifest["stage"] == stage
            assert manifest["seed"] == 7
            for name, recorded in manifest["outputs"].items():
                actual = hashlib.sha256(
                    (pipeline["out"] / name).read_bytes()).hexdigest()
                assert actual == recorded, f"{stage}: {name}"

    def test_svgs_are_well_formed(self, pipeline):
        for name in ("roc.svg", "pr.svg", "risk_timeline.svg",
                      "lead_times.svg", "feature_importance.svg"):
            doc = minidom.parseString((pipeline["out"] / name).read_text())
            assert doc.documentElement.tagName == "svg"

    def test_summary_mentions_every_model(self, pipeline):
        text = (pipeline["out"] / "summary.txt").read_text()
        for kind in MODEL_KINDS:
            assert kind in text
        assert "auroc" in text


class TestDeterminism:
    def test_same_config_different_out_dir_is_byte_identical(self, pipeline):
        cfg_path, out2 = make_workspace(pipeline["root"], out_name="out2")
        assert main(["run-all", "--config", cfg_path]) == 0
        for name in COMPARABLE:
            a = (pipeline["out"] / name).read_bytes()
            b = (out2 / name).read_bytes()
            assert a == b, f"artifact {name} differs across output directories"

    def test_rerun_into_same_dir_is_idempotent(self, pipeline):
        before = {n: (pipeline["out"] / n).read_bytes() for n in EXPECTED_ARTIFACTS}
        assert main(["run-all", "--config", pipeline["config"]]) == 0
        after = {n: (pipeline["out"] / n).read_bytes() for n in EXPECTED_ARTIFACTS}
        assert before == after

    def test_seed_flag_changes_models(self, pipeline, tmp_path):
        cfg_path, out3 = make_workspace(pipeline["root"], out_name="out3")
        assert main(["run-all", "--config", cfg_path, "--seed", "8"]) == 0
        a = (pipeline["out"] / "model_gcn.srrm").read_bytes()
        b = (out3 / "model_gcn.srrm").read_bytes()
        assert a != b


class TestExitCodes:
    def test_usage_errors_exit_one(self, capsys, tmp_path):
        assert main([]) == 1
        assert "missing subcommand" in capsys.readouterr().err
        assert main(["no-such-stage"]) == 1
        assert main(["run-all", "--preset", "mars-landing"]) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_prices_config_exits_one(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{}")
        assert main(["ingest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert "prices_csv" in capsys.readouterr().err

    def test_malformed_config_exits_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["ingest", "--config", str(bad)]) == 1
        unknown = tmp_path / "unknown.json"
        unknown.write_text(json.dumps({"bogus_section": 1}))
        assert main(["ingest", "--config", str(unknown)]) == 1
        assert "bogus_section" in capsys.readouterr().err

    def test_stage_without_upstream_exits_two(self, capsys, tmp_path):
        cfg_path, _ = make_workspace(tmp_path, out_name="fresh")
        assert main(["features", "--config", cfg_path]) == 2
        err = capsys.readouterr().err
        assert "rerun `srr ingest`" in err

    def test_evaluate_before_train_names_model_artifact(self, capsys, tmp_path):
        cfg_path, _ = make_workspace(tmp_path, out_name="half", n_days=260)
        for stage in ("ingest", "features", "graphs"):
            assert main([stage, "--config", cfg_path]) == 0
        assert main(["evaluate", "--config", cfg_path]) == 2
        err = capsys.readouterr().err
        assert "model_logistic.srrm" in err
        assert "rerun `srr train`" in err

    def test_seed_mismatch_is_stale(self, capsys, tmp_path):
        cfg_path, _ = make_workspace(tmp_path, out_name="stale", n_days=260)
        assert main(["ingest", "--config", cfg_path]) == 0
        assert main(["features", "--config", cfg_path, "--seed", "99"]) == 2
        err = capsys.readouterr().err
        assert "stale" in err and "rerun `srr ingest`" in err

    def test_tampered_artifact_detected(self, capsys, tmp_path):
        cfg_path, out = make_workspace(tmp_path, out_name="tamper", n_days=260)
        assert main(["ingest", "--config", cfg_path]) == 0
        prices = out / "prices.csv"
        prices.write_bytes(prices.read_bytes() + b"X,oops\n")
        assert main(["features", "--config", cfg_path]) == 2
        err = capsys.readouterr().err
        assert "prices.csv" in err and "rerun `srr ingest`" in err


class TestInstalledEntryPoint:
    def test_srr_script_maps_exit_codes(self, tmp_path):
        exe = shutil.which("srr")
        assert exe is not None, "console script `srr` is not on PATH"
        cfg_path, _ = make_workspace(tmp_path, out_name="sub")
        proc = subprocess.run([exe, "features", "--config", cfg_path],
                              capture_output=True, text=True)
        assert proc.returncode == 2
        assert "rerun `srr ingest`" in proc.stderr

    def test_module_invocation_offers_help(self):
        proc = subprocess.run([sys.executable, "-c",
                               "from srr.cli import main; raise SystemExit(main(['--help']))"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "ingest" in proc.stdout and "run-all" in proc.stdout
