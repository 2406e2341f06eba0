import json
from pathlib import Path
from unittest.mock import patch

import pandas as pd
import pytest
import yaml
from click.testing import CliRunner

from worldprobe.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, cli
from worldprobe.jobs import ExperimentJob
from worldprobe.models import REPORT_COLUMNS

CONFIGS = Path(__file__).parent.parent / "configs"

TINY = {
    "name": "tiny",
    "room": {"kind": "random", "crop_size": 3},
    "agent": {"embed_dim": 8, "conv_channels": [4, 4, 4, 4, 2], "hidden_dim": 16,
              "lstm": True, "lstm_size": 12, "crop_size": 3, "n_actions": 4},
    "ppo": {"rollout_length": 32, "n_workers": 2, "bptt_chunk": 16,
            "minibatch_size": 32, "epochs_per_batch": 1, "max_env_steps": 128},
    "collect": {"n_samples": 400, "n_train": 300, "n_test": 50, "n_envs": 4},
    "probes": [
        {"tap": "lstm_hidden", "arch": "linear", "epochs": 2, "batch_size": 64},
        {"tap": "lstm_cell", "arch": "mlp3", "hidden_dim": 8, "epochs": 2,
         "batch_size": 64},
    ],
}


def _write_config(path: Path, out: Path, **changes) -> Path:
    config = dict(TINY, output_dir=str(out), **changes)
    path.write_text(yaml.safe_dump(config))
    return path


def _invoke(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def test_dry_run(tmp_path):
    out = tmp_path / "run"
    result = _invoke("train", "--config", CONFIGS / "experiment2.yaml",
                     "--out", out, "--dry-run", "--no-progress")

    assert result.exit_code == EXIT_OK, result.output
    assert "config ok" in result.output
    assert not out.exists()


def test_invalid_config_reports_field_path(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("room:\n  crop_size: 4\n")

    result = _invoke("train", "--config", path, "--dry-run")

    assert result.exit_code == EXIT_CONFIG
    assert "room.crop_size" in result.output


def test_missing_and_malformed_config(tmp_path):
    result = _invoke("train", "--config", tmp_path / "nothing.yaml", "--dry-run")
    assert result.exit_code == EXIT_CONFIG

    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    assert _invoke("train", "--config", path, "--dry-run").exit_code == EXIT_CONFIG

    path.write_text("room: [unclosed\n")
    assert _invoke("train", "--config", path, "--dry-run").exit_code == EXIT_CONFIG


def test_collect_without_checkpoint(tmp_path):
    config = _write_config(tmp_path / "tiny.yaml", tmp_path / "run")
    result = _invoke("collect", "--config", config, "--no-progress")

    assert result.exit_code == EXIT_RUNTIME
    assert "MissingArtifactError" in result.output


def test_end_to_end(tmp_path):
    out = tmp_path / "run"
    config = _write_config(tmp_path / "tiny.yaml", out)

    result = _invoke("experiment", "--config", config, "--no-progress")
    assert result.exit_code == EXIT_OK, result.output

    for name in ("checkpoint_final.apck", "checkpoint_best.apck", "metrics.csv",
                 "activations_lstm_hidden.apds", "activations_lstm_cell.apds",
                 "activations_lstm_hidden.json", "probe_lstm_hidden_linear.appb",
                 "probe_lstm_cell_mlp3.appb", "report.csv", "eval_report.csv"):
        assert (out / name).is_file(), name

    report = pd.read_csv(out / "report.csv")
    assert list(report.columns) == REPORT_COLUMNS
    assert len(report) == 2
    assert (report["chance"].round(3) == 0.077).all()
    assert pd.read_csv(out / "eval_report.csv").equals(report)

    metrics = pd.read_csv(out / "metrics.csv")
    assert len(metrics) == 2

    result = _invoke("eval", "--config", config, "--no-progress")
    assert result.exit_code == EXIT_OK, result.output
    assert pd.read_csv(out / "eval_report.csv").equals(report)

    result = _invoke("probe", "--config", config, "--no-progress", "--control", "shuffled")
    assert result.exit_code == EXIT_OK, result.output
    assert (out / "report_shuffled.csv").is_file()
    assert (out / "probe_lstm_cell_mlp3_shuffled.appb").is_file()

    resized = dict(TINY["agent"], lstm_size=10)
    other = _write_config(tmp_path / "other.yaml", out, agent=resized)
    result = _invoke("probe", "--config", other, "--no-progress")
    assert result.exit_code == EXIT_RUNTIME
    assert "activation_dim" in result.output

    result = _invoke("render", "--config", config, "--max-frames", 3, "--episode-seed", 4)
    assert result.exit_code == EXIT_OK, result.output
    assert result.output.count("step ") == 3


def test_tables_carry_provenance(tmp_path):
    out = tmp_path / "run"
    config = _write_config(tmp_path / "tiny.yaml", out)
    assert _invoke("experiment", "--config", config, "--no-progress").exit_code == EXIT_OK

    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["stage"] == "train"
    assert metrics["env_steps"] == 128
    assert metrics["config"]["name"] == "tiny"

    report = json.loads((out / "report.json").read_text())
    evaluated = json.loads((out / "eval_report.json").read_text())
    assert (report["stage"], evaluated["stage"]) == ("probe", "eval")
    assert report["config_hash"] == evaluated["config_hash"] == metrics["config_hash"]
    assert report["seeds"] == metrics["seeds"]
    assert (report["rows"], report["controls"]) == (2, ["none"])


def test_unexpected_error_exits_with_runtime_code(tmp_path):
    config = _write_config(tmp_path / "tiny.yaml", tmp_path / "run")

    with patch.object(ExperimentJob, "train", side_effect=OSError("Read-only file system")):
        result = _invoke("train", "--config", config, "--no-progress")

    assert result.exit_code == EXIT_RUNTIME
    assert "OSError" in result.output


def test_render_random_policy(tmp_path):
    config = _write_config(tmp_path / "tiny.yaml", tmp_path / "run")
    result = _invoke("render", "--config", config, "--random-policy", "--sample")

    assert result.exit_code == EXIT_OK, result.output
    assert "return" in result.output
    assert "@" in result.output


@pytest.mark.slow
def test_headline_probe_beats_chance(tmp_path):
    result = _invoke("experiment", "--config", CONFIGS / "experiment3.yaml",
                     "--out", tmp_path, "--no-progress")
    assert result.exit_code == EXIT_OK, result.output

    report = pd.read_csv(tmp_path / "report.csv")
    cell = report[(report["tap"] == "lstm_cell") & (report["arch"] == "mlp3")]
    assert cell["acc_mean"].iloc[0] >= 0.231
