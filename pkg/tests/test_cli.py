import json

import pytest

from config import Config
from conftest import tiny_train_config
from core.pipeline import CalibrationPipeline
from main import EXIT_FAILURE, EXIT_INVALID, EXIT_OK, main


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.setattr(Config, "THREADS_RAW", "1")
    monkeypatch.setattr(Config, "LOG_LEVEL", "INFO")
    monkeypatch.setattr(Config, "GENERATOR_MANIFEST", None)


@pytest.fixture
def settings_file(tmp_path):
    settings = {
        "campaign": {"n_sim": 40, "n_train": 7, "n_validation": 5, "image_side": 8, "seed": 1},
        "surrogate": tiny_train_config(iterations=5).model_dump(mode="json"),
        "tl": {"iterations": 3, "learning_rate": 1e-3},
        "splits": {"n_splits": 2},
    }
    path = tmp_path / "settings.json"
    path.write_text(json.dumps(settings))
    return path


def run(out, settings_file, *args):
    return main(["--config", str(settings_file), "--out", str(out), *args])


def test_full_command_chain(tmp_path, settings_file, capsys):
    out = tmp_path / "run"
    assert run(out, settings_file, "generate-data") == EXIT_OK
    assert (out / "data" / "exp_train" / "manifest.json").is_file()
    assert run(out, settings_file, "train-surrogate") == EXIT_OK
    assert (out / "models" / "surrogate" / "fit_report.json").is_file()
    assert run(out, settings_file, "evaluate-surrogate") == EXIT_OK
    assert (out / "models" / "surrogate" / "evaluation.csv").is_file()
    assert run(out, settings_file, "transfer-learn") == EXIT_OK
    assert (out / "models" / "tl" / "base_ref.json").is_file()
    assert run(out, settings_file, "baseline") == EXIT_OK
    assert (out / "models" / "baseline" / "compressor.json").is_file()
    assert run(out, settings_file, "crossval") == EXIT_OK
    report_dir = out / "reports" / "crossval_random_with_replacement"
    assert (report_dir / "index.json").is_file()
    (report_dir / "scalars_metrics.csv").unlink()
    assert run(out, settings_file, "report", "crossval_random_with_replacement") == EXIT_OK
    assert (report_dir / "scalars_metrics.csv").is_file()
    printed = capsys.readouterr().out
    assert "[OK] crossval finished" in printed
    assert "=" * 60 in printed


def test_crossval_protocol_flag(tmp_path, settings_file):
    out = tmp_path / "run"
    for command in ("generate-data", "train-surrogate"):
        assert run(out, settings_file, command) == EXIT_OK
    assert run(out, settings_file, "crossval", "--protocol", "EXHAUSTIVE", "--no-baseline") == EXIT_OK
    report = json.loads((out / "reports" / "crossval_exhaustive" / "report.json").read_text())
    assert report["protocol"] == "EXHAUSTIVE"
    assert len(report["splits"]) == 120
    assert "baseline" not in report["chi2n"]


def test_evaluate_without_holdout_is_a_settings_error(tmp_path, settings_file, capsys):
    settings = json.loads(settings_file.read_text())
    settings["surrogate"]["holdout_fraction"] = 0.0
    settings_file.write_text(json.dumps(settings))
    out = tmp_path / "run"
    for command in ("generate-data", "train-surrogate"):
        assert run(out, settings_file, command) == EXIT_OK
    assert run(out, settings_file, "evaluate-surrogate") == EXIT_INVALID
    assert "holdout_fraction" in capsys.readouterr().out
    assert not (out / "models" / "surrogate" / "evaluation.csv").exists()


def test_missing_config_file_exits_with_validation_code(tmp_path):
    assert main(["--config", str(tmp_path / "none.json"), "--out", str(tmp_path), "generate-data"]) == EXIT_INVALID


def test_invalid_settings_exit_with_validation_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"campaign": {"image_side": 2}}))
    assert main(["--config", str(path), "--out", str(tmp_path), "generate-data"]) == EXIT_INVALID


def test_commands_needing_earlier_artifacts_fail_cleanly(tmp_path, settings_file):
    assert run(tmp_path / "empty", settings_file, "train-surrogate") == EXIT_INVALID
    assert run(tmp_path / "empty", settings_file, "report", "nothing") == EXIT_INVALID


def test_bad_environment_exits_with_validation_code(tmp_path, settings_file, monkeypatch):
    monkeypatch.setattr(Config, "THREADS_RAW", "many")
    assert run(tmp_path, settings_file, "generate-data") == EXIT_INVALID


def test_runtime_failure_exits_with_failure_code(tmp_path, settings_file, monkeypatch):
    def boom(self):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(CalibrationPipeline, "generate_data", boom)
    assert run(tmp_path, settings_file, "generate-data") == EXIT_FAILURE


def test_unknown_choice_is_rejected_by_the_parser(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["--out", str(tmp_path), "--loss", "l1", "crossval"])
    assert info.value.code == 2
