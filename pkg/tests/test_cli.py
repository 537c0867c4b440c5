import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from nigar.cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main
from nigar.distributions import NigParams, RngStream
from nigar.fixtures import REAL_DATA_MODEL, price_fixture, write_price_fixture
from nigar.io import ingest_csv, write_series_csv
from nigar.model import NigArModel, simulate_path


def run(argv):
    return main([str(a) for a in argv])


def load(path):
    return json.loads(path.read_text())


class TestFit:
    def test_bundled_fixture(self, data_dir, tmp_path):
        out = tmp_path / "fit.json"
        assert run(["fit", "--input", data_dir / "synthetic_prices.csv", "--output", out]) == EXIT_OK
        doc = load(out)
        assert set(doc) == {"command", "config_echo", "seed", "result"}
        res = doc["result"]
        assert res["params"]["rho"] == pytest.approx(0.9941, abs=0.01)
        assert res["rho_cls"] == pytest.approx(0.9941, abs=0.01)
        assert res["ingest"]["length"] == 1594
        assert {"ks_normality", "jarque_bera", "ks_2sample_vs_fitted"} <= set(res["diagnostics"])

    def test_byte_identical(self, data_dir, tmp_path, monkeypatch):
        args = ["fit", "--input", data_dir / "synthetic_prices.csv", "--seed", 4]
        outputs = []
        for sub in ("a", "b"):
            (tmp_path / sub).mkdir()
            outputs.append(tmp_path / sub / "fit.json")
        # the echoed --output path is relative so both runs see the same text
        for out in outputs:
            monkeypatch.chdir(out.parent)
            run(args + ["--output", "fit.json"])
        assert outputs[0].read_bytes() == outputs[1].read_bytes()

    def test_too_short(self, tmp_path, capsys):
        path = tmp_path / "short.csv"
        write_series_csv(path, [1.0, 2.0, 1.5, 3.0, 2.0])
        assert run(["fit", "--input", path, "--column", "value"]) == EXIT_ERROR
        assert "at least 10" in capsys.readouterr().err

    def test_iteration_cap(self, data_dir, tmp_path):
        code = run(["fit", "-i", data_dir / "synthetic_prices.csv", "--max-iter", 1, "-o", tmp_path / "f.json"])
        assert code == EXIT_NOT_CONVERGED
        assert load(tmp_path / "f.json")["result"]["stop_reason"] == "max_iterations"

    def test_csv_output(self, data_dir, tmp_path):
        out = tmp_path / "trace.csv"
        assert run(["fit", "-i", data_dir / "sample_prices.csv", "--format", "csv", "-o", out]) in (0, 2)
        lines = out.read_text().splitlines()
        assert lines[0] == "iteration,loglik,rho,alpha,beta,mu,delta,gamma"
        meta = load(tmp_path / "trace.csv.meta.json")
        assert "trace" not in meta["result"] and meta["command"] == "fit"

    def test_missing_input(self, tmp_path, capsys):
        assert run(["fit", "-i", tmp_path / "nope.csv"]) == EXIT_ERROR
        assert "no such file" in capsys.readouterr().err

    def test_missing_column(self, data_dir, capsys):
        assert run(["fit", "-i", data_dir / "sample_prices.csv", "--column", "Klose"]) == EXIT_ERROR
        assert "available columns" in capsys.readouterr().err

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as info:
            main(["fit"])
        assert info.value.code == EXIT_ERROR
        with pytest.raises(SystemExit) as info:
            main(["fit", "-i", "x.csv", "--mode", "sideways"])
        assert info.value.code == EXIT_ERROR


class TestSimulate:
    FIG1 = ["--delta", 2, "--gamma", 2, "--mu", 1, "--beta", 1, "--n", 1000, "--seed", 17]

    def test_figure_design(self, tmp_path):
        out = tmp_path / "sim.csv"
        assert run(["simulate", "--rho", 0.5, *self.FIG1, "-o", out]) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "index,value" and len(lines) == 1001
        meta = load(tmp_path / "sim.csv.meta.json")
        assert meta["seed"] == 17
        assert meta["result"]["model"]["gamma"] == pytest.approx(2.0, rel=1e-15)
        assert meta["result"]["model"]["rho"] == 0.5

    def test_regenerates_bit_identically(self, tmp_path, monkeypatch):
        for sub in ("a", "b"):
            (tmp_path / sub).mkdir()
            monkeypatch.chdir(tmp_path / sub)
            run(["simulate", "--rho", 0.9, *self.FIG1, "-o", "sim.csv"])
        for name in ("sim.csv", "sim.csv.meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_round_trip_matches_in_memory_path(self, tmp_path):
        out = tmp_path / "sim.csv"
        run(["simulate", "--rho", 0.5, *self.FIG1, "-o", out])
        model = NigArModel(0.5, NigParams.from_gamma(2.0, 1.0, 1.0, 2.0))
        direct = simulate_path(model, 1000, RngStream(17, 0)).values
        assert np.array_equal(ingest_csv(out, "value").values, direct)

    def test_json(self, capsys):
        assert run(["simulate", "--n", 5, "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["result"]["values"]) == 5
        assert doc["config_echo"]["alpha"] == 2.24

    def test_zero_length(self, capsys):
        assert run(["simulate", "--n", 0]) == EXIT_ERROR
        assert "--n" in capsys.readouterr().err

    def test_invalid_params(self):
        assert run(["simulate", "--alpha", 0.5, "--beta", 1.0]) == EXIT_ERROR

    def test_alpha_and_gamma_exclusive(self):
        with pytest.raises(SystemExit):
            main(["simulate", "--alpha", "2", "--gamma", "1"])


class TestDiagnose:
    def _series_file(self, tmp_path, values, name="s.csv"):
        path = tmp_path / name
        write_series_csv(path, values)
        return path

    def test_white_noise(self, tmp_path):
        x = RngStream(70).normal(2000)
        out = tmp_path / "d.json"
        code = run(["diagnose", "-i", self._series_file(tmp_path, x), "--column", "value", "-o", out])
        assert code == EXIT_OK
        res = load(out)["result"]
        lag1 = res["pacf"][1]
        assert abs(lag1["value"]) < lag1["conf_band"]
        assert len(res["acf"]) == 31
        assert sum(res["residual_histogram"]["counts"]) == 1999
        assert len(res["qq"]["residual"]) == 1999

    def test_ar1_like(self, tmp_path):
        model = NigArModel(0.95, NigParams(2.24, 1, 1, 2))
        y = simulate_path(model, 2000, RngStream(71)).values
        out = tmp_path / "d.json"
        run(["diagnose", "-i", self._series_file(tmp_path, y), "--column", "value", "-o", out])
        res = load(out)["result"]
        assert res["pacf"][1]["value"] > res["pacf"][1]["conf_band"]
        acf_vals = [p["value"] for p in res["acf"]]
        assert all(abs(acf_vals[k]) > acf_vals[0] * 0.2 for k in range(1, 11))
        assert acf_vals[1] > acf_vals[5] > acf_vals[10]

    def test_fitted_residuals_pass_two_sample_check(self, tmp_path):
        passes = 0
        for seed in range(10):
            y = simulate_path(NigArModel(0.5, NigParams(2.24, 1, 1, 2)), 1594, RngStream(72, seed)).values
            out = tmp_path / f"d{seed}.json"
            path = self._series_file(tmp_path, y, f"s{seed}.csv")
            assert run(["diagnose", "-i", path, "--column", "value", "--seed", seed, "-o", out]) == EXIT_OK
            passes += load(out)["result"]["ks_2sample_vs_fitted"]["p_value"] > 0.05
        assert passes >= 9

    def test_given_parameters_skip_fit(self, data_dir, tmp_path):
        out = tmp_path / "d.json"
        args = ["diagnose", "-i", data_dir / "synthetic_prices.csv", "--rho", 0.9941, "--gamma", 0.0201]
        args += ["--beta", 0, "--mu", 0.226, "--delta", 9.365, "-o", out]
        assert run(args) == EXIT_OK
        res = load(out)["result"]
        assert res["fit"] is None and res["model"]["rho"] == 0.9941

    def test_partial_parameters_rejected(self, data_dir, capsys):
        assert run(["diagnose", "-i", data_dir / "synthetic_prices.csv", "--rho", 0.9]) == EXIT_ERROR
        assert "missing model parameter" in capsys.readouterr().err

    def test_csv(self, data_dir, tmp_path):
        out = tmp_path / "c.csv"
        run(["diagnose", "-i", data_dir / "synthetic_prices.csv", "--format", "csv", "--max-lag", 5, "-o", out])
        lines = out.read_text().splitlines()
        assert lines[0] == "lag,acf,pacf,band" and len(lines) == 7


class TestReplicate:
    def test_smoke(self, tmp_path):
        out = tmp_path / "rep.csv"
        start = time.perf_counter()
        code = run(["replicate", "--reps", 5, "--n", 2000, "--format", "csv", "-o", out, "--seed", 3])
        assert code == EXIT_OK
        assert time.perf_counter() - start < 60
        lines = out.read_text().splitlines()
        assert lines[0] == "replicate,alpha,beta,mu,delta,gamma,rho" and len(lines) == 6
        summary = load(tmp_path / "rep.csv.summary.json")["result"]
        assert summary["reps"] == 5 and summary["completed"] == 5
        box = summary["summaries"]["alpha"]
        assert box["minimum"] <= box["q1"] <= box["median"] <= box["q3"] <= box["maximum"]

    def test_invalid_truth_fails_fast(self, capsys):
        start = time.perf_counter()
        assert run(["replicate", "--alpha", 1.0, "--beta", 1.0]) == EXIT_ERROR
        assert time.perf_counter() - start < 2
        assert "alpha must exceed" in capsys.readouterr().err

    def test_json(self, capsys):
        assert run(["replicate", "--reps", 2, "--n", 300, "--format", "json"]) == EXIT_OK
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["result"]["estimates"]) == 2


class TestFixtures:
    def test_deterministic_and_documented(self, tmp_path, data_dir):
        meta = write_price_fixture(tmp_path / "p.csv", seed=0)
        assert (tmp_path / "p.csv").read_bytes() == (data_dir / "synthetic_prices.csv").read_bytes()
        assert meta["rows"] == 1594
        assert meta["effective_mu"] == pytest.approx(
            REAL_DATA_MODEL.innov.mu + meta["offset"] * (1 - REAL_DATA_MODEL.rho)
        )

    def test_close_is_shifted_path(self):
        rows, meta = price_fixture(n=300, seed=5)
        close = np.array([r[4] for r in rows])
        path = simulate_path(REAL_DATA_MODEL, 300, RngStream(5, 0)).values
        assert np.allclose(close - meta["offset"], path, rtol=0, atol=1e-9)
        assert close.min() > 0
        assert all(r[2] >= max(r[1], r[4]) and r[3] <= min(r[1], r[4]) for r in rows)

    def test_ohlcv_ingest(self, tmp_path):
        write_price_fixture(tmp_path / "p.csv", n=50, seed=2)
        s = ingest_csv(tmp_path / "p.csv")
        assert len(s) == 50 and s.labels == tuple(sorted(s.labels))


def test_log_level_env(data_dir, tmp_path):
    env = dict(os.environ, NIGAR_LOG="debug")
    proc = subprocess.run(
        [sys.executable, "-m", "nigar.cli", "fit", "-i", str(data_dir / "sample_prices.csv"), "-o", str(tmp_path / "x.json")],
        env=env,
        capture_output=True,
        text=True,
    )
    assert proc.returncode in (0, 2)
    assert "DEBUG nigar.estimation: iteration 1" in proc.stderr
    quiet = subprocess.run(
        [sys.executable, "-m", "nigar.cli", "fit", "-i", str(data_dir / "sample_prices.csv"), "-o", str(tmp_path / "y.json")],
        env=dict(os.environ, NIGAR_LOG="error"),
        capture_output=True,
        text=True,
    )
    assert "DEBUG" not in quiet.stderr and "INFO" not in quiet.stderr
