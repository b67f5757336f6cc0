import json

import numpy as np
import pytest

from exactsi import TrainingSet, save_csv, uniform_toy
from exactsi.cli import main


@pytest.fixture()
def train_csv(tmp_path):
    path = tmp_path / "train.csv"
    save_csv(uniform_toy(4, 2, seed=7), path)
    return str(path)


class TestSchedulesAndDataset:
    def test_schedules_list(self, capsys):
        assert main(["schedules", "list"]) == 0
        out = capsys.readouterr().out
        for kind in ("linear", "sqrt", "poly", "poly-sq", "quad"):
            assert kind in out

    def test_dataset_gen_and_validate(self, tmp_path, capsys):
        out = str(tmp_path / "pts.csv")
        assert main(["dataset", "gen", "--n", "6", "--d", "3", "--seed", "1",
                     "--out", out]) == 0
        assert main(["dataset", "validate", out]) == 0
        assert "6 anchors of dimension 3" in capsys.readouterr().out

    def test_dataset_validate_bad_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0,2.0\n1.0,2.0\n")
        assert main(["dataset", "validate", str(bad)]) == 1
        assert "duplicate" in capsys.readouterr().err

    def test_missing_file_is_runtime_error(self, tmp_path):
        assert main(["dataset", "validate", str(tmp_path / "nope.csv")]) == 2


class TestFieldEval:
    def test_velocity_json(self, tmp_path, capsys):
        path = tmp_path / "two.csv"
        save_csv(TrainingSet(points=np.array([[0.0], [1.0]])), path)
        rc = main(["field", "eval", "--which", "velocity", "--z", "0.5",
                   "--t", "0.5", "--schedule", "linear", "--train", str(path)])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"][0] == pytest.approx(-0.24492, abs=5e-6)
        assert payload["argmax"] == 1
        assert len(payload["weights"]) == 2

    def test_score_and_logdensity(self, tmp_path, capsys):
        path = tmp_path / "two.csv"
        save_csv(TrainingSet(points=np.array([[0.0], [1.0]])), path)
        assert main(["field", "eval", "--which", "score", "--z", "0.5",
                     "--t", "0.5", "--schedule", "linear", "--train", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"][0] == pytest.approx(-0.75508, abs=5e-6)
        assert main(["field", "eval", "--which", "logdensity", "--z", "0.5",
                     "--t", "0.5", "--schedule", "linear", "--train", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert isinstance(payload["value"], float)

    def test_two_sided_requires_second_set(self, train_csv):
        assert main(["field", "eval", "--which", "two-sided", "--z", "0.1,0.1",
                     "--t", "0.5", "--schedule", "sqrt", "--train", train_csv]) == 1

    def test_singular_time_is_runtime_error(self, train_csv):
        assert main(["field", "eval", "--which", "velocity", "--z", "0.1,0.1",
                     "--t", "0.0", "--schedule", "sqrt", "--train", train_csv]) == 2


class TestSampleAndAnalyze:
    def test_sample_then_analyze(self, tmp_path, train_csv, capsys):
        endpoints = str(tmp_path / "endpoints.csv")
        rc = main(["sample", "--mode", "deterministic", "--schedule", "sqrt",
                   "--train", train_csv, "--n-steps", "400", "--t-end", "1e-3",
                   "--count", "25", "--seed", "5", "--out", endpoints])
        assert rc == 0
        header = open(endpoints).readline().strip().split(",")
        assert header == ["sample_id", "z_0", "z_1", "nearest_idx",
                          "nearest_dist", "diverged"]
        report = str(tmp_path / "report.json")
        rc = main(["analyze", "--samples", endpoints, "--train", train_csv,
                   "--report", report])
        assert rc == 0
        doc = json.loads(open(report).read())
        assert doc["count"] == 25
        assert doc["memorized_fraction"] is not None
        assert set(doc["classes"]) == {"converged", "vicinity", "diverged"}
        assert len(doc["per_sample"]) == 25

    def test_sample_with_error_and_trajectories(self, tmp_path, train_csv):
        endpoints = str(tmp_path / "e.csv")
        traj = str(tmp_path / "t.csv")
        rc = main(["sample", "--schedule", "linear", "--train", train_csv,
                   "--n-steps", "100", "--t-end", "1e-2", "--count", "3",
                   "--out", endpoints, "--trajectories", traj,
                   "--error-family", "bounded", "--error-lambda", "4.0",
                   "--error-direction", "fixed:1,0"])
        assert rc == 0
        header = open(traj).readline().strip().split(",")
        assert header == ["sample_id", "t", "z_0", "z_1", "eps_norm", "clipped"]
        row = open(traj).readlines()[1].strip().split(",")
        assert float(row[-2]) == pytest.approx(2.0)

    def test_invalid_error_direction(self, tmp_path, train_csv):
        rc = main(["sample", "--schedule", "linear", "--train", train_csv,
                   "--out", str(tmp_path / "x.csv"),
                   "--error-family", "bounded", "--error-lambda", "1.0",
                   "--error-direction", "sideways"])
        assert rc == 1

    def test_analyze_raw_matrix(self, tmp_path, train_csv):
        raw = tmp_path / "raw.csv"
        raw.write_text("0.5,0.5\n0.1,0.9\n")
        report = str(tmp_path / "r.json")
        assert main(["analyze", "--samples", str(raw), "--train", train_csv,
                     "--report", report]) == 0
        doc = json.loads(open(report).read())
        assert doc["count"] == 2


class TestExperimentAndVerify:
    def test_experiment_list(self, capsys):
        assert main(["experiment", "list"]) == 0
        out = capsys.readouterr().out
        for name in ("fig1a", "fig2-lam25", "fig3-vicinity", "fig4-lam1e-10",
                     "two-sided"):
            assert name in out

    def test_experiment_run_config_file(self, tmp_path, capsys):
        cfg = {
            "name": "cli-tiny",
            "seed": 2,
            "schedule": {"kind": "sqrt", "params": {}},
            "dataset": {"kind": "uniform", "n": 3, "d": 2, "seed": 4},
            "sampler": {"steps": 100, "t_end": 1e-2, "mode": "deterministic",
                        "count": 10, "record_trajectory": False},
            "out_dir": str(tmp_path / "run"),
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        assert main(["experiment", "run", str(path)]) == 0
        assert (tmp_path / "run" / "manifest.json").exists()

    def test_experiment_unknown_preset(self, tmp_path):
        assert main(["experiment", "run", "fig9z"]) == 2  # treated as a path

    def test_verify_invariants_exit_zero(self, capsys):
        assert main(["verify", "invariants"]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out

    def test_config_schema_prints(self, capsys):
        assert main(["config-schema"]) == 0
        assert "schedule" in capsys.readouterr().out
