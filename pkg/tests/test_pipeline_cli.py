import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cmml.cli import main
from cmml.config import ConfigError, load_config, parse_config
from cmml.pipeline import PHASES, load_model, run
from cmml.report import emit_report
from cmml.tabular import load_csv

DATA = Path(__file__).resolve().parent.parent / "data"


def compact_config(tmp_path, **overrides):
    """Minimal fast config against the shipped CSV/constraints."""
    raw = {
        "problem": {"title": "compact"},
        "data": {
            "csv": str(DATA / "pima.csv"),
            "target": "Outcome",
            "zero_as_missing": ["Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI"],
        },
        "constraints": {"path": str(DATA / "pima.cmc"), "on_violation": "abort"},
        "engineering": {
            "steps": [
                {"op": "impute", "feature": "Glucose", "strategy": "mean"},
                {"op": "impute", "feature": "BloodPressure", "strategy": "mean"},
                {"op": "impute", "feature": "SkinThickness", "strategy": "median"},
                {"op": "impute", "feature": "BMI", "strategy": "median"},
                {"op": "impute", "feature": "Insulin", "strategy": "median"},
                {"op": "derive_from_constraints"},
            ]
        },
        "models": [{"model": "cart", "max_depth": 3, "min_samples_leaf": 5}],
        "validation": {"k": 3, "seed": 7},
        "gates": [{"metric": "accuracy", "comparator": ">=", "threshold": 0.5, "severity": "hard"}],
        "report": {"dir": str(tmp_path / "report"), "figures": False},
    }
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


@pytest.fixture(scope="module")
def shipped_report(tmp_path_factory):
    config = load_config(DATA / "pima_config.json")
    report = run(config)
    out = tmp_path_factory.mktemp("shipped")
    paths = emit_report(report, out, figures=True)
    return report, paths


class TestShippedRun:
    def test_row_and_feature_counts(self, shipped_report):
        report, _ = shipped_report
        assert report.data["n_rows"] == 768
        assert report.data["n_features"] == 9

    def test_reference_statistics_in_report(self, shipped_report):
        report, _ = shipped_report
        stats = report.data["descriptive_stats"]
        assert stats["Glucose"]["mean"] == pytest.approx(120.89, abs=0.02)
        assert stats["Glucose"]["std"] == pytest.approx(31.97, abs=0.02)
        assert report.data["missing_fractions_after_repair"]["Insulin"] == pytest.approx(
            0.487, abs=0.001
        )

    def test_phase_log_in_order(self, shipped_report):
        report, _ = shipped_report
        assert tuple(p.name for p in report.phases) == PHASES

    def test_raw_audit_records_violations(self, shipped_report):
        report, _ = shipped_report
        audit = {r["name"]: r for r in report.constraints["raw_audit"]}
        assert audit["Glucose"]["status"] == "fail"
        assert audit["Glucose"]["violating_row_count"] == 5
        assert audit["C3"]["status"] == "vacuous"
        post = {r["name"]: r for r in report.constraints["post_repair"]}
        assert post["Glucose"]["status"] == "pass"
        assert post["Glucose"]["skipped_rows"] == 5

    def test_scorecard_completeness_cells(self, shipped_report):
        report, _ = shipped_report
        cells = report.scorecard["cells"]
        assert cells["Insulin"]["completeness"]["grade"] == "--"
        assert cells["Pregnancies"]["completeness"]["grade"] == "++"

    def test_leaderboard_and_selection(self, shipped_report):
        report, _ = shipped_report
        assert len(report.leaderboard) == 4
        labels = {e["model"] for e in report.leaderboard}
        assert labels == {"logistic", "cart", "gbm", "knn"}
        assert report.selection["best_label"] == report.leaderboard[0]["label"]

    def test_gate_verdict_present(self, shipped_report):
        report, _ = shipped_report
        assert report.gates_passed is True
        assert "verdict" in report.gates

    def test_report_files_written(self, shipped_report):
        _, paths = shipped_report
        for key in ("json", "markdown", "model", "leaderboard"):
            assert Path(paths[key]).exists()

    def test_figures_rendered(self, shipped_report):
        _, paths = shipped_report
        for key in ("fig_distributions", "fig_correlation", "fig_leaderboard"):
            assert Path(paths[key]).stat().st_size > 1000

    def test_markdown_has_scorecard_criteria(self, shipped_report):
        _, paths = shipped_report
        text = Path(paths["markdown"]).read_text()
        for label in ("Believability", "Access security", "Ease of operation", "Consistency"):
            assert label in text

    def test_json_roundtrips(self, shipped_report):
        _, paths = shipped_report
        doc = json.loads(Path(paths["json"]).read_text())
        assert doc["data"]["n_rows"] == 768
        assert json.loads(json.dumps(doc)) == doc


class TestRunSemantics:
    def test_empty_model_grid_fails_before_training(self, tmp_path):
        config = load_config(compact_config(tmp_path, models=[]))
        with pytest.raises(ConfigError, match="grid is empty"):
            run(config)

    def test_abort_on_hard_constraint_failure(self, tmp_path):
        bad = tmp_path / "bad.cmc"
        bad.write_text("range Age: > 200\n")
        config = load_config(
            compact_config(tmp_path, constraints={"path": str(bad), "on_violation": "abort"})
        )
        report = run(config)
        assert report.aborted
        assert report.leaderboard == []
        statuses = {p.name: p.status for p in report.phases}
        assert statuses["model_training"] == "skipped"
        assert statuses["analytical_decision_making"] == "skipped"

    def test_warn_mode_continues(self, tmp_path):
        bad = tmp_path / "bad.cmc"
        bad.write_text("range Age: > 200\n")
        config = load_config(
            compact_config(tmp_path, constraints={"path": str(bad), "on_violation": "warn"})
        )
        report = run(config)
        assert not report.aborted
        assert report.leaderboard

    def test_train_only_skips_gate_phase(self, tmp_path):
        config = load_config(compact_config(tmp_path))
        report = run(config, train_only=True)
        assert tuple(p.name for p in report.phases) == PHASES[:6]
        assert report.model_envelope is not None

    def test_missing_target_rejected(self, tmp_path):
        config = load_config(compact_config(tmp_path, data={
            "csv": str(DATA / "pima.csv"), "target": "Nope"}))
        with pytest.raises(ConfigError, match="Nope"):
            run(config)


class TestConfigHash:
    def test_report_paths_do_not_change_hash(self, tmp_path):
        a = load_config(compact_config(tmp_path))
        b = load_config(compact_config(tmp_path, report={"dir": "elsewhere", "figures": True}))
        assert a.hash() == b.hash()

    def test_seed_changes_hash(self, tmp_path):
        a = load_config(compact_config(tmp_path))
        b = load_config(compact_config(tmp_path, validation={"k": 3, "seed": 8}))
        assert a.hash() != b.hash()

    def test_model_grid_changes_hash(self, tmp_path):
        a = load_config(compact_config(tmp_path))
        b = load_config(compact_config(tmp_path, models=[{"model": "cart", "max_depth": 4}]))
        assert a.hash() != b.hash()


class TestSeedPrecedence:
    def test_override_beats_config(self, tmp_path):
        config = load_config(compact_config(tmp_path))
        assert config.seed(override=99) == 99
        assert config.seed() == 7

    def test_env_is_lowest_priority(self, tmp_path, monkeypatch):
        raw = json.loads(compact_config(tmp_path).read_text())
        raw["validation"].pop("seed")
        config = parse_config(raw, base_dir=str(tmp_path))
        monkeypatch.setenv("CMML_SEED", "1234")
        assert config.seed() == 1234
        monkeypatch.delenv("CMML_SEED")
        with pytest.raises(ConfigError, match="seed"):
            config.seed()


class TestCli:
    def test_run_exit_zero_and_outputs(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["run", "--config", str(compact_config(tmp_path)), "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "report.md").exists()
        assert (out / "model.json").exists()

    def test_run_determinism_byte_identical_but_timestamp(self, tmp_path):
        config = compact_config(tmp_path)
        env = dict(os.environ, PYTHONPATH="src")
        for out in ("d1", "d2"):
            proc = subprocess.run(
                [sys.executable, "-m", "cmml.cli", "run", "--config", str(config),
                 "--out", str(tmp_path / out)],
                capture_output=True, text=True, env=env,
            )
            assert proc.returncode == 0, proc.stderr
        a = (tmp_path / "d1" / "report.json").read_text().splitlines()
        b = (tmp_path / "d2" / "report.json").read_text().splitlines()
        differing = [x for x, y in zip(a, b) if x != y]
        assert len(a) == len(b)
        assert all("timestamp" in line for line in differing)
        assert (tmp_path / "d1" / "model.json").read_bytes() == (
            tmp_path / "d2" / "model.json"
        ).read_bytes()

    def test_gate_failure_exit_code(self, tmp_path):
        config = compact_config(
            tmp_path,
            gates=[{"metric": "accuracy", "comparator": ">=", "threshold": 0.999, "severity": "hard"}],
        )
        code = main(["run", "--config", str(config), "--out", str(tmp_path / "g")])
        assert code == 2
        # report still written
        assert (tmp_path / "g" / "report.json").exists()

    def test_constraint_abort_exit_code_and_marker(self, tmp_path):
        bad = tmp_path / "bad.cmc"
        bad.write_text("range Age: > 200\n")
        config = compact_config(tmp_path, constraints={"path": str(bad), "on_violation": "abort"})
        code = main(["run", "--config", str(config), "--out", str(tmp_path / "a")])
        assert code == 3
        doc = json.loads((tmp_path / "a" / "report.json").read_text())
        assert doc["aborted"] is True
        assert doc["leaderboard"] == []

    def test_operational_error_exit_code(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nothere.json")]) == 1

    def test_seed_override_changes_report(self, tmp_path):
        config = compact_config(tmp_path)
        main(["run", "--config", str(config), "--out", str(tmp_path / "s1"), "--seed", "1"])
        doc = json.loads((tmp_path / "s1" / "report.json").read_text())
        assert doc["environment"]["seed"] == 1

    def test_train_subcommand(self, tmp_path):
        out = tmp_path / "t"
        code = main(["train", "--config", str(compact_config(tmp_path)), "--out", str(out)])
        assert code == 0
        doc = json.loads((out / "report.json").read_text())
        assert [p["name"] for p in doc["phases"]] == list(PHASES[:6])

    def test_check_subcommand(self, capsys):
        code = main(["check", "--data", str(DATA / "pima.csv"), "--constraints", str(DATA / "pima.cmc")])
        captured = json.loads(capsys.readouterr().out)
        names = {s["name"]: s for s in captured["statements"]}
        assert names["Glucose"]["violating_row_count"] == 5
        assert code == 3  # raw data has range failures

    def test_stats_subcommand(self, capsys):
        code = main(["stats", "--data", str(DATA / "pima.csv")])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["Glucose"]["mean"] == pytest.approx(120.89, abs=0.02)


class TestPredict:
    @pytest.fixture(scope="class")
    def trained(self, tmp_path_factory):
        tmp_path = tmp_path_factory.mktemp("predict")
        out = tmp_path / "out"
        code = main(["run", "--config", str(compact_config(tmp_path)), "--out", str(out)])
        assert code == 0
        return out / "model.json", tmp_path

    def test_predictions_csv_shape(self, trained, capsys):
        model_path, tmp_path = trained
        subset = tmp_path / "three.csv"
        lines = (DATA / "pima.csv").read_text().splitlines()
        subset.write_text("\n".join(lines[:4]) + "\n")
        out_csv = tmp_path / "preds.csv"
        code = main(["predict", "--model", str(model_path), "--input", str(subset), "--output", str(out_csv)])
        assert code == 0
        rows = out_csv.read_text().splitlines()
        header = rows[0].split(",")
        assert header[:9] == lines[0].split(",")
        assert "prediction" in header
        assert len(rows) == 4
        for row in rows[1:]:
            assert row.split(",")[header.index("prediction")] in ("0", "1")

    def test_serialized_model_matches_in_memory_on_100_rows(self, trained, tmp_path):
        model_path, base = trained
        loaded = load_model(model_path)
        dataset = load_csv(DATA / "pima.csv")
        rng = np.random.default_rng(0)
        rows = list(rng.choice(768, size=100, replace=False))
        subset = dataset.select_rows(rows)
        first, _ = loaded.predict_dataset(subset)
        again, _ = load_model(model_path).predict_dataset(subset)
        assert np.array_equal(first, again)

    def test_missing_required_feature_named(self, trained, tmp_path):
        model_path, base = trained
        broken = tmp_path / "broken.csv"
        lines = (DATA / "pima.csv").read_text().splitlines()
        header = lines[0].split(",")
        drop = header.index("BMI")
        rows = [",".join(v for i, v in enumerate(line.split(",")) if i != drop) for line in lines[:5]]
        broken.write_text("\n".join(rows) + "\n")
        code = main(["predict", "--model", str(model_path), "--input", str(broken), "--output", str(tmp_path / "x.csv")])
        assert code == 1

    def test_knn_k1_returns_training_label(self, tmp_path):
        config = compact_config(tmp_path, models=[{"model": "knn", "k": 1}])
        out = tmp_path / "knn_out"
        assert main(["run", "--config", str(config), "--out", str(out)]) == 0
        loaded = load_model(out / "model.json")
        dataset = load_csv(DATA / "pima.csv")
        rows = [5, 100, 700]
        predictions, _ = loaded.predict_dataset(dataset.select_rows(rows))
        labels = [dataset.column("Outcome")[i] for i in rows]
        assert list(predictions) == labels
