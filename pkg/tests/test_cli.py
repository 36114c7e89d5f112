import csv
import json

import numpy as np
import pytest

from dii.cli import main


@pytest.fixture
def gaussian_dir(tmp_path):
    out = tmp_path / "data"
    assert main(["generate", "--benchmark", "gaussian", "--n", "60",
                 "--seed", "3", "--out", str(out)]) == 0
    return out


@pytest.fixture
def small_csv(tmp_path, rng):
    """Three features, one ground-truth column derived from two of them."""
    x = rng.standard_normal((50, 3))
    g = 2.0 * x[:, 0] + x[:, 1]
    path = tmp_path / "small.csv"
    with path.open("w") as fh:
        fh.write("a,b,c,g\n")
        for i in range(50):
            fh.write(f"{float(x[i, 0])!r},{float(x[i, 1])!r},"
                     f"{float(x[i, 2])!r},{float(g[i])!r}\n")
    return path


def opt_args(data_dir, out, *extra):
    return ["optimize", "--data", str(data_dir / "dataset.csv"),
            "--epochs", "5", "--eta0", "0.5", "--out", str(out), *extra]


class TestGenerate:
    def test_writes_dataset_and_manifest(self, gaussian_dir):
        assert (gaussian_dir / "dataset.csv").is_file()
        assert (gaussian_dir / "dataset.csv.meta.json").is_file()
        manifest = json.loads((gaussian_dir / "manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert "generate" in manifest["timings_s"]

    def test_monomial_benchmark(self, tmp_path):
        out = tmp_path / "mono"
        assert main(["generate", "--benchmark", "monomial", "--n", "40",
                     "--out", str(out)]) == 0
        with (out / "dataset.csv").open() as fh:
            header = fh.readline().strip().split(",")
        assert sum(1 for h in header if not h.startswith("gt_")) == 285


class TestOptimize:
    def test_outputs(self, gaussian_dir, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(opt_args(gaussian_dir, out)) == 0
        assert "best DII" in capsys.readouterr().out

        with (out / "weights.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 10
        assert rows[0]["feature"] == "X1"
        assert float(rows[0]["best"]) > 0

        lines = (out / "trace.jsonl").read_text().strip().split("\n")
        assert len(lines) == 6
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["epochs"] == 5
        assert set(manifest["timings_s"]) == {"rank_matrix", "optimize"}
        assert manifest["inputs"]

    def test_byte_identical_reruns(self, gaussian_dir, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(opt_args(gaussian_dir, out1)) == 0
        assert main(opt_args(gaussian_dir, out2)) == 0
        assert (out1 / "weights.csv").read_bytes() == (out2 / "weights.csv").read_bytes()
        assert (out1 / "trace.jsonl").read_bytes() == (out2 / "trace.jsonl").read_bytes()

    def test_plot_flag_renders_figure(self, gaussian_dir, tmp_path):
        out = tmp_path / "run"
        assert main(opt_args(gaussian_dir, out, "--plot")) == 0
        assert (out / "trace.png").stat().st_size > 0

    def test_gt_cols_self(self, small_csv, tmp_path):
        out = tmp_path / "run"
        assert main(["optimize", "--data", str(small_csv), "--gt-cols", "self",
                     "--epochs", "3", "--eta0", "0.5", "--out", str(out)]) == 0

    def test_row_subsampling(self, gaussian_dir, tmp_path):
        out = tmp_path / "run"
        assert main(opt_args(gaussian_dir, out, "--rows", "fixed:20")) == 0

    def test_config_file_and_flag_precedence(self, gaussian_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 3, "eta0": 0.5}))
        out = tmp_path / "run"
        assert main(["optimize", "--data", str(gaussian_dir / "dataset.csv"),
                     "--config", str(cfg), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["epochs"] == 3

        out2 = tmp_path / "run2"
        assert main(["optimize", "--data", str(gaussian_dir / "dataset.csv"),
                     "--config", str(cfg), "--epochs", "4", "--out", str(out2)]) == 0
        manifest = json.loads((out2 / "manifest.json").read_text())
        assert manifest["config"]["epochs"] == 4


class TestPathCommands:
    def test_lasso(self, gaussian_dir, tmp_path):
        out = tmp_path / "run"
        assert main(["lasso", "--data", str(gaussian_dir / "dataset.csv"),
                     "--epochs", "5", "--eta0", "0.5",
                     "--l1-grid", "1e-5,1e-3,1e-1", "--out", str(out)]) == 0
        with (out / "path.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["control"]) for r in rows] == [1e-5, 1e-3, 1e-1]
        with (out / "curve.csv").open() as fh:
            assert len(list(csv.DictReader(fh))) >= 1

    def test_greedy(self, small_csv, tmp_path):
        out = tmp_path / "run"
        assert main(["greedy", "--data", str(small_csv), "--gt-cols", "g",
                     "--epochs", "3", "--eta0", "0.5", "--out", str(out)]) == 0
        with (out / "path.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert [int(float(r["control"])) for r in rows] == [3, 2, 1]

    def test_exhaustive(self, small_csv, tmp_path):
        out = tmp_path / "run"
        assert main(["exhaustive", "--data", str(small_csv), "--gt-cols", "g",
                     "--epochs", "3", "--eta0", "0.5", "--out", str(out)]) == 0
        with (out / "path.csv").open() as fh:
            assert len(list(csv.DictReader(fh))) == 7

    def test_exhaustive_refuses_many_features(self, gaussian_dir, tmp_path):
        out = tmp_path / "run"
        code = main(["exhaustive", "--data", str(gaussian_dir / "dataset.csv"),
                     "--epochs", "2", "--eta0", "0.5", "--max-d", "4",
                     "--out", str(out)])
        assert code == 2


class TestEvalAndCrossval:
    def test_eval_round_trip(self, gaussian_dir, tmp_path, capsys):
        run = tmp_path / "run"
        assert main(opt_args(gaussian_dir, run)) == 0
        out = tmp_path / "eval"
        assert main(["eval", "--data", str(gaussian_dir / "dataset.csv"),
                     "--weights", str(run / "weights.csv"),
                     "--out", str(out)]) == 0
        report = json.loads((out / "eval.json").read_text())
        assert 0 < report["dii"] < 2

    def test_crossval(self, gaussian_dir, tmp_path):
        out = tmp_path / "run"
        assert main(["crossval", "--data", str(gaussian_dir / "dataset.csv"),
                     "--epochs", "3", "--eta0", "0.5", "--blocks", "2",
                     "--out", str(out)]) == 0
        report = json.loads((out / "crossval.json").read_text())
        assert report["n_blocks"] == 2
        assert len(report["blocks"]) == 2


class TestGradcheckCommand:
    def test_passes(self, capsys):
        assert main(["gradcheck", "--trials", "2", "--points", "30",
                     "--features", "4"]) == 0
        assert capsys.readouterr().out.startswith("PASS")

    def test_rejects_oversized_instances(self):
        assert main(["gradcheck", "--points", "500"]) == 2


class TestErrorPaths:
    def test_missing_data_file(self, tmp_path):
        assert main(["optimize", "--data", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_conflicting_gt_flags(self, small_csv, tmp_path):
        assert main(["optimize", "--data", str(small_csv), "--gt-cols", "g",
                     "--gt-data", str(small_csv),
                     "--out", str(tmp_path / "o")]) == 2

    def test_no_ground_truth(self, small_csv, tmp_path):
        assert main(["optimize", "--data", str(small_csv),
                     "--out", str(tmp_path / "o")]) == 2

    def test_bad_lambda(self, small_csv, tmp_path):
        assert main(["optimize", "--data", str(small_csv), "--gt-cols", "g",
                     "--lambda", "zero", "--out", str(tmp_path / "o")]) == 2

    def test_bad_epochs(self, small_csv, tmp_path):
        assert main(["optimize", "--data", str(small_csv), "--gt-cols", "g",
                     "--epochs", "0", "--out", str(tmp_path / "o")]) == 2

    def test_unknown_config_key(self, small_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        assert main(["optimize", "--data", str(small_csv), "--gt-cols", "g",
                     "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_over_regularization_is_numerical_abort(self, small_csv, tmp_path):
        assert main(["optimize", "--data", str(small_csv), "--gt-cols", "g",
                     "--epochs", "3", "--eta0", "0.5", "--l1", "1e9",
                     "--out", str(tmp_path / "o")]) == 3
