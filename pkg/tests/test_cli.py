import json

import numpy as np
import pytest

from agboost.cli import main
from agboost.data import load_csv


def run_cli(*args):
    return main([str(a) for a in args])


class TestGenerate:
    def test_deterministic_files(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert run_cli("generate", "friedman1", "--n", 100, "--seed", 7, "--out", a) == 0
        assert run_cli("generate", "friedman1", "--n", 100, "--seed", 7, "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip(self, tmp_path):
        out = tmp_path / "f2.csv"
        run_cli("generate", "friedman2", "--n", 40, "--noise", 0, "--seed", 1, "--out", out)
        data = load_csv(out, "target")
        assert (data.n, data.m) == (40, 4)

    def test_unknown_dataset_rejected(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("generate", "mystery", "--out", tmp_path / "x.csv")
        assert exc.value.code == 2


class TestBenchmark:
    def _config(self, tmp_path, **extra):
        cfg = {
            "datasets": [{"name": "friedman1", "n": 60}],
            "iterations": 5,
            "repetitions": 2,
            "epsilon_grid": [0.0, 1.0],
            "delta_grid": [0.1, 1.0],
            "seed": 1,
        }
        cfg.update(extra)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg))
        return path

    def test_smoke(self, tmp_path, capsys):
        cfg = self._config(tmp_path)
        out_dir = tmp_path / "out"
        assert run_cli("benchmark", "--config", cfg, "--out-dir", out_dir) == 0
        report = json.loads((out_dir / "report.json").read_text())
        assert set(report["datasets"][0]["metrics"]) == {"gbm", "nonparam", "agboost"}
        assert (out_dir / "report.md").exists() and (out_dir / "report.csv").exists()

    def test_missing_config_nonzero_exit(self, tmp_path, capsys):
        assert run_cli("benchmark", "--config", tmp_path / "nope.json") == 1
        assert "error:" in capsys.readouterr().err

    def test_env_out_dir_override(self, tmp_path, monkeypatch):
        cfg = self._config(tmp_path)
        override = tmp_path / "env_out"
        monkeypatch.setenv("AGBOOST_OUT_DIR", str(override))
        assert run_cli("benchmark", "--config", cfg, "--out-dir", tmp_path / "ignored") == 0
        assert (override / "report.json").exists()
        assert not (tmp_path / "ignored").exists()

    def test_unknown_flag_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run_cli("benchmark", "--config", "x.json", "--frobnicate")
        assert exc.value.code == 2


class TestGridSearch:
    def test_writes_grid_csv(self, tmp_path):
        out = tmp_path / "grid.csv"
        code = run_cli(
            "gridsearch",
            "--dataset", "friedman1",
            "--n", 60,
            "--iterations", 5,
            "--repetitions", 2,
            "--epsilon-grid", "0.0,1.0",
            "--delta-grid", "0.5,1.0",
            "--out", out,
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("epsilon,")
        assert len(lines) == 3  # header + one row per epsilon


class TestTrainPredict:
    def test_round_trip(self, tmp_path, capsys):
        data_csv = tmp_path / "data.csv"
        run_cli("generate", "friedman1", "--n", 80, "--seed", 3, "--out", data_csv)
        model_path = tmp_path / "model.json"
        code = run_cli(
            "train",
            "--csv", data_csv,
            "--target-column", "target",
            "--model", "agboost",
            "--iterations", 5,
            "--epsilon", "0.5",
            "--delta", "1.0",
            "--out", model_path,
        )
        assert code == 0
        preds_path = tmp_path / "preds.csv"
        code = run_cli(
            "predict",
            "--model-file", model_path,
            "--csv", data_csv,
            "--target-column", "target",
            "--out", preds_path,
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "r2 =" in out
        preds = preds_path.read_text().strip().splitlines()
        assert preds[0] == "prediction"
        assert len(preds) == 81

    def test_train_gbm_and_nonparam(self, tmp_path):
        data_csv = tmp_path / "data.csv"
        run_cli("generate", "sparse", "--n", 60, "--seed", 2, "--out", data_csv)
        for model in ("gbm", "nonparam"):
            out = tmp_path / f"{model}.json"
            code = run_cli(
                "train",
                "--csv", data_csv,
                "--target-column", "target",
                "--model", model,
                "--iterations", 4,
                "--out", out,
            )
            assert code == 0
            payload = json.loads(out.read_text())
            assert payload["kind"] == ("gbm" if model == "gbm" else "attention")
