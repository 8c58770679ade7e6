import json

import pytest
import yaml
from click.testing import CliRunner

from qabias.cli import main
from qabias.data import item_to_record, parse_dataset_file
from tests.conftest import make_item


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, dataset_path, **extra):
    cfg = {
        "seed": 0,
        "datasets": [{"path": str(dataset_path), "format": "canonical_jsonl"}],
        "split": {"ratio": 0.8},
        "scorer": {"encoder": "lexical", "epochs": 6},
    }
    cfg.update(extra)
    path.write_text(yaml.safe_dump(cfg))
    return path


@pytest.fixture
def dataset_file(tmp_path, marker_dataset):
    path = tmp_path / "synthetic.jsonl"
    with path.open("w") as f:
        for item in marker_dataset:
            f.write(json.dumps(item_to_record(item)) + "\n")
    return path


@pytest.fixture
def run_config(tmp_path, dataset_file):
    return write_config(tmp_path / "run.yaml", dataset_file)


class TestIngest:
    def test_prints_stats(self, runner, dataset_file):
        result = runner.invoke(main, ["ingest", str(dataset_file)])
        assert result.exit_code == 0
        assert "300 items" in result.output
        assert "5 annotators" in result.output
        assert "0 rejected" in result.output

    def test_writes_canonical_copy(self, runner, dataset_file, tmp_path):
        out = tmp_path / "copy.jsonl"
        result = runner.invoke(main, ["ingest", str(dataset_file), "--out", str(out)])
        assert result.exit_code == 0
        reread = parse_dataset_file(out, "canonical_jsonl")
        assert len(reread.handle) == 300 and not reread.errors

    def test_reports_rejected_lines(self, runner, tmp_path):
        path = tmp_path / "dirty.jsonl"
        good = json.dumps(item_to_record(make_item("ok")))
        bad = json.dumps({"item_id": "bad", "question": "q"})
        path.write_text(good + "\n" + bad + "\nnot json\n")
        result = runner.invoke(main, ["ingest", str(path)])
        assert result.exit_code == 0
        assert "2 rejected" in result.output
        assert "rejected line 2" in result.output

    def test_tvqa_raw_format(self, runner, tmp_path):
        raw = {
            "qid": "t1", "q": "why now?", "answer_idx": 1, "vid_name": "clip",
            "annotator_id": "w1",
            **{f"a{i}": f"answer {i}" for i in range(5)},
        }
        path = tmp_path / "raw.jsonl"
        path.write_text(json.dumps(raw) + "\n")
        result = runner.invoke(
            main, ["ingest", str(path), "--fmt", "tvqa_raw", "--dataset-id", "tv"]
        )
        assert result.exit_code == 0
        assert "tv: 1 items" in result.output


class TestSynthSplitTrainEval:
    def test_synth_writes_dataset(self, runner, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text(yaml.safe_dump({
            "synth": {"n_items": 50, "k_annotators": 2, "marker_bias_rate": 1.0},
        }))
        result = runner.invoke(main, [
            "synth", "--config", str(cfg), "--out", str(tmp_path / "o"),
        ])
        assert result.exit_code == 0
        written = tmp_path / "o" / "synthetic.jsonl"
        assert written.exists()
        assert len(parse_dataset_file(written, "canonical_jsonl").handle) == 50

    def test_split_writes_disjoint_id_lists(self, runner, run_config, tmp_path):
        result = runner.invoke(main, [
            "split", "--config", str(run_config), "--out", str(tmp_path / "o"),
        ])
        assert result.exit_code == 0
        doc = json.loads((tmp_path / "o" / "synthetic-splits.json").read_text())
        assert len(doc["train"]) == 240 and len(doc["valid"]) == 60
        assert not set(doc["train"]) & set(doc["valid"])

    def test_train_then_eval_round_trip(self, runner, run_config, tmp_path):
        out = str(tmp_path / "o")
        trained = runner.invoke(main, ["train", "--config", str(run_config), "--out", out])
        assert trained.exit_code == 0
        ckpt = tmp_path / "o" / "synthetic-scorer.json"
        log = tmp_path / "o" / "synthetic-training-log.jsonl"
        assert ckpt.exists()
        entries = [json.loads(line) for line in log.read_text().splitlines()]
        assert [e["epoch"] for e in entries] == list(range(6))

        evaled = runner.invoke(main, [
            "eval", "--checkpoint", str(ckpt), "--config", str(run_config), "--out", out,
        ])
        assert evaled.exit_code == 0
        doc = json.loads((tmp_path / "o" / "synthetic-eval.json").read_text())
        assert doc["accuracy"] == 100.0  # fully planted markers
        assert "accuracy 100.00%" in evaled.output

    def test_missing_datasets_is_usage_error(self, runner, tmp_path):
        cfg = tmp_path / "empty.yaml"
        cfg.write_text("{}")
        result = runner.invoke(main, ["split", "--config", str(cfg)])
        assert result.exit_code != 0
        assert "no datasets" in result.output


class TestProbeCommands:
    def test_ablate_emits_all_formats(self, runner, run_config, tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(main, [
            "ablate", "--config", str(run_config), "--out", str(out),
        ])
        assert result.exit_code == 0
        doc = json.loads((out / "report.json").read_text())
        assert set(doc["ablation"]) == {"qa", "answer_only", "qa_frozen"}
        assert (out / "report.md").exists()

    def test_transfer_two_datasets(self, runner, tmp_path, dataset_file):
        from qabias.synth import SyntheticBiasConfig, generate_synthetic_dataset

        plain = generate_synthetic_dataset(SyntheticBiasConfig(
            n_items=200, k_annotators=4, marker_bias_rate=0.0, seed=11,
            dataset_id="plain",
        ))
        other = tmp_path / "plain.jsonl"
        with other.open("w") as f:
            for item in plain:
                f.write(json.dumps(item_to_record(item)) + "\n")
        cfg = write_config(
            tmp_path / "two.yaml", dataset_file,
            datasets=[
                {"path": str(dataset_file), "format": "canonical_jsonl"},
                {"path": str(other), "format": "canonical_jsonl"},
            ],
        )
        out = tmp_path / "o"
        result = runner.invoke(main, [
            "transfer", "--config", str(cfg), "--out", str(out), "--jobs", "2",
        ])
        assert result.exit_code == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["transfer"]["train_ids"] == ["synthetic", "plain"]
        assert (out / "transfer_matrix.csv").exists()

    def test_annotator_matrix_with_heatmap(self, runner, tmp_path, dataset_file):
        cfg = write_config(
            tmp_path / "am.yaml", dataset_file,
            annotators={"k": 3, "per_annotator_train": 40, "per_annotator_valid": 10},
        )
        out = tmp_path / "o"
        result = runner.invoke(main, [
            "annotator-matrix", "--config", str(cfg), "--out", str(out),
        ])
        assert result.exit_code == 0
        doc = json.loads((out / "report.json").read_text())
        assert len(doc["shift_matrix"]["annotators"]) == 3
        assert (out / "annotator_heatmap.svg").exists()

    def test_resplit_reports_per_dropped(self, runner, tmp_path, dataset_file):
        cfg = write_config(
            tmp_path / "rs.yaml", dataset_file,
            annotators={"k": 3, "per_annotator_train": 40, "per_annotator_valid": 10},
        )
        out = tmp_path / "o"
        result = runner.invoke(main, [
            "resplit", "--config", str(cfg), "--out", str(out),
        ])
        assert result.exit_code == 0
        doc = json.loads((out / "report.json").read_text())
        assert len(doc["resplit"]["per_dropped"]) == 3

    def test_qtype_with_bars(self, runner, run_config, tmp_path):
        out = tmp_path / "o"
        result = runner.invoke(main, [
            "qtype", "--config", str(run_config), "--out", str(out),
        ])
        assert result.exit_code == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["type_accuracy"]
        assert (out / "type_bars.svg").exists()

    def test_combined_report_runs_selected_probes(self, runner, tmp_path, dataset_file):
        cfg = write_config(
            tmp_path / "full.yaml", dataset_file,
            probes=["ablate", "qtype", "annotator-matrix"],
            annotators={"k": 3, "per_annotator_train": 40, "per_annotator_valid": 10},
        )
        out = tmp_path / "o"
        result = runner.invoke(main, [
            "report", "--config", str(cfg), "--out", str(out),
        ])
        assert result.exit_code == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["ablation"] and doc["type_accuracy"] and doc["shift_matrix"]
        assert doc["resplit"] is None
        assert doc["provenance"]["dataset_hashes"]
        assert (out / "annotator_heatmap.svg").exists()
        assert (out / "type_bars.svg").exists()
