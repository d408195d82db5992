"""End-to-end command line checks via main(argv)."""
import json

import pytest

from netspice import ExperimentConfig, TimeSeries
from netspice.cli import main

TINY_CFG = dict(J=4, K=2, rho=0.3, n_ratios=(1.0, 2.0), monte_carlo=2,
                master_seed=7)


def _read_scores(path):
    lines = path.read_text().splitlines()
    assert lines[0] == "metric,value"
    return {k: float(v) for k, v in (ln.split(",") for ln in lines[1:])}


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    """Generate one synthetic record and estimate it once."""
    out = tmp_path_factory.mktemp("demo")
    assert main(["generate", "--J", "4", "--K", "2", "--rho", "0.3",
                 "--samples", "400", "--seed", "5",
                 "--out-dir", str(out)]) == 0
    assert main(["estimate", "--input", str(out / "series.csv"),
                 "--K", "2", "--output", str(out / "est.json")]) == 0
    return out


class TestGenerate:
    def test_outputs(self, demo_dir):
        w = TimeSeries.load_csv(demo_dir / "series.csv")
        assert w.data.shape == (4, 400)
        truth = json.loads((demo_dir / "truth.json").read_text())
        assert truth["J"] == 4
        assert truth["seed"] == 5

    def test_deterministic(self, tmp_path):
        for sub in ("a", "b"):
            assert main(["generate", "--J", "3", "--K", "2", "--rho", "0.4",
                         "--samples", "50", "--seed", "9",
                         "--out-dir", str(tmp_path / sub)]) == 0
        assert ((tmp_path / "a" / "series.csv").read_text()
                == (tmp_path / "b" / "series.csv").read_text())
        assert ((tmp_path / "a" / "truth.json").read_text()
                == (tmp_path / "b" / "truth.json").read_text())


class TestEstimate:
    def test_diagnostics_default_path(self, demo_dir):
        diag = json.loads((demo_dir / "est.diagnostics.json").read_text())
        assert [n["node"] for n in diag["nodes"]] == [1, 2, 3, 4]
        assert all(n["converged"] for n in diag["nodes"])
        assert all(n["kkt_residual"] <= 1e-6 for n in diag["nodes"])
        assert all(n["sigma2"] > 0 for n in diag["nodes"])

    def test_explicit_diagnostics_path(self, demo_dir, tmp_path):
        diag = tmp_path / "d.json"
        assert main(["estimate", "--input", str(demo_dir / "series.csv"),
                     "--K", "2", "--output", str(tmp_path / "n.json"),
                     "--diagnostics", str(diag)]) == 0
        assert diag.exists()

    def test_missing_input(self, tmp_path, capsys):
        rc = main(["estimate", "--input", str(tmp_path / "nope.csv"),
                   "--K", "2", "--output", str(tmp_path / "n.json")])
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert "error" in err and "message" in err


class TestEvaluate:
    def test_scores(self, demo_dir, tmp_path):
        scores = tmp_path / "scores.csv"
        assert main(["evaluate", "--estimated", str(demo_dir / "est.json"),
                     "--truth", str(demo_dir / "truth.json"),
                     "--output", str(scores)]) == 0
        vals = _read_scores(scores)
        assert vals["tpr"] == 1.0
        assert vals["fpr"] == 0.0
        assert vals["dis"] == 0.0
        assert vals["nmse"] < 0.1
        assert vals["n_true_edges"] == 4

    def test_node_count_mismatch(self, demo_dir, tmp_path, capsys):
        other = tmp_path / "other"
        assert main(["generate", "--J", "3", "--K", "2", "--rho", "0.4",
                     "--samples", "50", "--seed", "1",
                     "--out-dir", str(other)]) == 0
        rc = main(["evaluate", "--estimated", str(demo_dir / "est.json"),
                   "--truth", str(other / "truth.json"),
                   "--output", str(tmp_path / "s.csv")])
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "ValueError"


@pytest.fixture(scope="module")
def experiment_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    cfg_path = out / "cfg.json"
    ExperimentConfig(**TINY_CFG).save_json(cfg_path)
    assert main(["experiment", "--config", str(cfg_path),
                 "--out-dir", str(out / "results"), "--workers", "1"]) == 0
    return out / "results"


class TestExperiment:
    def test_report_files(self, experiment_dir):
        names = {p.name for p in experiment_dir.iterdir()}
        assert {"config.json", "table.csv", "long.csv", "performance.png",
                "nmse.png", "taps.png"} <= names
        for png in ("performance.png", "nmse.png", "taps.png"):
            assert (experiment_dir / png).stat().st_size > 0

    def test_summary_lines(self, experiment_dir, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        ExperimentConfig(**{**TINY_CFG, "monte_carlo": 1}).save_json(cfg_path)
        assert main(["experiment", "--config", str(cfg_path),
                     "--out-dir", str(tmp_path / "r"), "--no-figures"]) == 0
        out = capsys.readouterr().out
        assert "n_ratio=1:" in out and "n_ratio=2:" in out
        names = {p.name for p in (tmp_path / "r").iterdir()}
        assert names == {"config.json", "table.csv", "long.csv"}

    def test_overrides_recorded(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        ExperimentConfig(**TINY_CFG).save_json(cfg_path)
        assert main(["experiment", "--config", str(cfg_path),
                     "--out-dir", str(tmp_path / "r"), "--no-figures",
                     "--monte-carlo", "1", "--master-seed", "3"]) == 0
        back = ExperimentConfig.load_json(tmp_path / "r" / "config.json")
        assert back.monte_carlo == 1
        assert back.master_seed == 3
        lines = (tmp_path / "r" / "table.csv").read_text().splitlines()
        assert sum(ln.startswith("run,") for ln in lines) == 2


class TestReplay:
    def test_matches_stored_table(self, experiment_dir, capsys):
        assert main(["replay", "--results", str(experiment_dir),
                     "--run", "1"]) == 0
        out = capsys.readouterr().out
        assert "matches the stored table (2 rows)" in out

    def test_detects_corruption(self, experiment_dir, tmp_path, capsys):
        import shutil
        bad = tmp_path / "bad"
        shutil.copytree(experiment_dir, bad)
        table = bad / "table.csv"
        lines = table.read_text().splitlines()
        idx = next(i for i, ln in enumerate(lines) if ln.startswith("run,1,"))
        cells = lines[idx].split(",")
        cells[5] = "0.123"  # tamper with tpr
        lines[idx] = ",".join(cells)
        table.write_text("\n".join(lines) + "\n")
        rc = main(["replay", "--results", str(bad), "--run", "1"])
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "RuntimeError"
        assert "mismatch" in err["message"]

    def test_unknown_run(self, experiment_dir, capsys):
        rc = main(["replay", "--results", str(experiment_dir), "--run", "9"])
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "ValueError"


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.strip()

    def test_command_required(self):
        with pytest.raises(SystemExit):
            main([])
