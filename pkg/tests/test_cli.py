import json
import os
import subprocess
import sys

import numpy as np
import pytest

from ompath.cli import main
from ompath.gaussian import read_path_csv
from ompath.sde import ObservationSet, write_observations_csv


def run_cli(argv):
    return main([str(a) for a in argv])


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestSimulate:
    def test_zero_drift_zero_noise_constant_path(self, tmp_path):
        out = tmp_path / "sim"
        rc = run_cli(["simulate", "--drift", "zero", "--sigma", "0", "--u0", "3",
                      "--T", "1", "--dt", "0.01", "--output-dir", out])
        assert rc == 0
        path = read_path_csv(out / "truth_path.csv")
        assert np.all(path.values == 3.0)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["params"]["seed"] == 0

    def test_observations_with_sidecar(self, tmp_path):
        out = tmp_path / "sim"
        rc = run_cli(["simulate", "--T", "2", "--dt", "0.01", "--J", "4",
                      "--gamma", "0.3", "--seed", "9", "--output-dir", out])
        assert rc == 0
        sidecar = json.loads((out / "observations.json").read_text())
        assert sidecar["gamma"] == 0.3
        assert sidecar["seed"] == 9
        assert sidecar["drift"] == "double-well"
        lines = (out / "observations.csv").read_text().splitlines()
        assert lines[0] == "t,y" and len(lines) == 5


class TestManifestRoundTrip:
    @pytest.mark.parametrize("argv,outputs", [
        (["simulate", "--T", "1", "--dt", "0.01", "--J", "3", "--gamma", "0.5",
          "--seed", "11"], ["truth_path.csv", "observations.csv"]),
        (["smallball", "--eigenvalues", "1,0.5", "--z1", "0.6,0.2", "--z2", "0,0",
          "--radii", "0.5,0.25", "--n-samples", "20000", "--seed", "2"],
         ["ratio_table.csv", "bound_table.csv"]),
        (["consistency-noise", "--J", "3", "--gammas", "0.5,0.25", "--T", "4",
          "--dt", "0.05", "--n-starts", "2", "--seed", "4"],
         ["consistency_noise_4.csv"]),
    ])
    def test_rerun_is_byte_identical(self, tmp_path, argv, outputs):
        first = tmp_path / "first"
        again = tmp_path / "again"
        assert run_cli(argv + ["--output-dir", first]) == 0
        assert run_cli(["rerun", first / "manifest.json", "--output-dir", again]) == 0
        for name in outputs:
            assert read_bytes(first / name) == read_bytes(again / name)

    def test_rerun_rejects_foreign_manifest(self, tmp_path):
        bad = tmp_path / "manifest.json"
        bad.write_text(json.dumps({"artifact": "other", "command": "simulate",
                                   "params": {}}))
        assert run_cli(["rerun", bad, "--output-dir", tmp_path / "x"]) == 2


class TestMap:
    def test_generated_observations_regime_runs(self, tmp_path):
        out = tmp_path / "map"
        rc = run_cli(["map", "--variant", "smoothing", "--drift", "double-well",
                      "--sigma", "1", "--u-minus", "-1", "--J", "2",
                      "--n-starts", "8", "--seed", "7", "--output-dir", out])
        assert rc == 0
        report = json.loads((out / "minimum_report.json").read_text())
        assert len(report["minima"]) >= 1
        assert all(m["converged"] for m in report["minima"])
        best = read_path_csv(out / report["minima"][0]["path_file"])
        assert best.values[0] == -1.0

    def test_finds_multiple_minima_with_explicit_observations(self, tmp_path):
        # ambiguous data slightly above the upper well: two basins
        obs = ObservationSet(np.array([1.2, 2.4]), np.array([1.2, 1.1]), 0.6)
        write_observations_csv(obs, tmp_path / "obs.csv", tmp_path / "obs.json")
        out = tmp_path / "map"
        rc = run_cli(["map", "--variant", "smoothing", "--u-minus", "-1",
                      "--T", "4", "--dt", "0.02", "--observations", tmp_path / "obs.csv",
                      "--n-starts", "8", "--tol", "1e-6", "--seed", "7",
                      "--output-dir", out])
        assert rc == 0
        report = json.loads((out / "minimum_report.json").read_text())
        assert len(report["minima"]) >= 2
        values = [m["value"] for m in report["minima"]]
        assert values == sorted(values)

    def test_problem_json_input(self, tmp_path):
        prob_cfg = {"variant": "bridge", "drift": "double-well", "sigma": 1.0,
                     "u_minus": -1.0, "u_plus": 1.0, "dt": 0.02, "n_steps": 100}
        (tmp_path / "problem.json").write_text(json.dumps(prob_cfg))
        out = tmp_path / "map"
        rc = run_cli(["map", "--problem-json", tmp_path / "problem.json",
                      "--n-starts", "2", "--tol", "1e-6", "--output-dir", out])
        assert rc == 0
        report = json.loads((out / "minimum_report.json").read_text())
        path = read_path_csv(out / report["minima"][0]["path_file"])
        assert path.values[0] == -1.0 and path.values[-1] == 1.0


class TestConsistencyCommands:
    def test_noise_sweep_outputs(self, tmp_path):
        out = tmp_path / "cn"
        rc = run_cli(["consistency-noise", "--J", "3", "--gammas", "0.5,0.25",
                      "--T", "4", "--dt", "0.05", "--n-starts", "2",
                      "--seed", "1", "--output-dir", out])
        assert rc == 0
        meta = json.loads((out / "consistency_noise_1.json").read_text())
        assert meta["seed"] == 1 and "config_hash" in meta
        lines = (out / "consistency_noise_1.csv").read_text().splitlines()
        assert lines[0] == "abscissa,error" and len(lines) == 3

    def test_samples_sweep_outputs(self, tmp_path):
        out = tmp_path / "cs"
        rc = run_cli(["consistency-samples", "--J-values", "2,4", "--gamma", "1",
                      "--T", "4", "--dt", "0.05", "--n-starts", "2",
                      "--seed", "2", "--output-dir", out])
        assert rc == 0
        assert (out / "consistency_samples_2.csv").exists()

    def test_json_format_emits_curve(self, tmp_path):
        out = tmp_path / "cj"
        rc = run_cli(["consistency-noise", "--J", "3", "--gammas", "0.5,0.25",
                      "--T", "4", "--dt", "0.05", "--n-starts", "2",
                      "--seed", "3", "--format", "json", "--output-dir", out])
        assert rc == 0
        curve = json.loads((out / "consistency_noise_3_curve.json").read_text())
        assert len(curve) == 2 and {"abscissa", "error"} == set(curve[0])


class TestSmallball:
    def test_tables_and_verdicts(self, tmp_path):
        out = tmp_path / "sb"
        rc = run_cli(["smallball", "--eigenvalues", "1", "--z1", "1", "--z2", "0",
                      "--n-samples", "50000", "--seed", "3", "--output-dir", out])
        assert rc == 0
        lines = (out / "ratio_table.csv").read_text().splitlines()
        assert lines[0] == "radius,ratio,stderr,reference,verdict"
        bounds = (out / "bound_table.csv").read_text().splitlines()
        assert bounds[0] == "radius,ratio,stderr,bound,verdict"

    def test_linear_phi_validation(self, tmp_path):
        rc = run_cli(["smallball", "--eigenvalues", "1,0.5", "--z1", "1,0",
                      "--z2", "0,0", "--phi-linear", "1", "--n-samples", "1000",
                      "--output-dir", tmp_path / "x"])
        assert rc == 2


class TestErrorPaths:
    def test_invalid_configuration_exits_2(self, tmp_path):
        rc = run_cli(["map", "--variant", "bridge", "--output-dir", tmp_path / "x"])
        assert rc == 2

    def test_bad_grid_exits_2(self, tmp_path):
        rc = run_cli(["simulate", "--T", "1", "--dt", "0.3",
                      "--output-dir", tmp_path / "x"])
        assert rc == 2

    def test_runtime_failure_writes_error_json(self, tmp_path):
        # u -> -2u per step for the linear drift at dt = 3: guaranteed blow-up
        out = tmp_path / "boom"
        with np.errstate(over="ignore", invalid="ignore"):
            rc = run_cli(["simulate", "--drift", "ou", "--sigma", "0",
                          "--u0", "1", "--T", "3600", "--dt", "3",
                          "--output-dir", out])
        assert rc == 1
        err = json.loads((out / "error.json").read_text())
        assert err["error"] == "IntegrationDivergedError"


def test_check_command_passes(tmp_path, capsys):
    rc = run_cli(["check", "--output-dir", tmp_path / "chk"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "checks passed" in out
    assert "FAIL" not in out


def test_console_entry_point_subprocess(tmp_path):
    env = dict(os.environ)
    src = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "src"))
    env["PYTHONPATH"] = src + os.pathsep + env.get("PYTHONPATH", "")
    proc = subprocess.run(
        [sys.executable, "-m", "ompath", "simulate", "--drift", "zero",
         "--sigma", "0", "--u0", "1", "--T", "1", "--dt", "0.1",
         "--output-dir", str(tmp_path / "out")],
        capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "out" / "truth_path.csv").exists()
