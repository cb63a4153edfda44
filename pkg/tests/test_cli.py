import json
import math

import numpy as np
import pytest

from ejcsim.cli import (load_config, main, run_scenario, validate_config,
                        write_csv, write_manifest)
from ejcsim.errors import ConfigError
from ejcsim.scenarios import ScenarioResult


MINIMAL = 'scenario = "single_photon"\n'

FULL = """
scenario = "single_photon"

[setup]
kinetic_energy_ev = 100.0
energy_uncertainty_ev = 0.010
loss_probability = 0.01

[numerics]
points_per_recoil = 1
photon_cutoff = 1
signal_mode_count = 1
loss_mode_count = 0

[sweep]
points = 5
"""


class TestValidateConfig:
    def test_defaults_fill_reference_experiment(self):
        name, setup, numerics, params = validate_config(
            {"scenario": "single_photon"})
        assert name == "single_photon"
        assert setup.kinetic_energy_ev == 100.0
        assert setup.cavity_length_m == 1e-5
        assert setup.design_wavelength_m == 532e-9
        assert setup.refractive_index == 1.5
        assert setup.free_spectral_range == pytest.approx(2 * math.pi * 13e12)
        assert setup.energy_uncertainty_ev == 0.010
        assert setup.loss_probability == 1e-2
        assert setup.dimensionless_coupling == pytest.approx(math.pi / 2)
        assert setup.grating_period_m == pytest.approx(1.0781e-8, rel=1e-4)
        assert numerics.points_per_recoil == 8
        assert numerics.photon_cutoff == 3

    def test_pair_and_swap_default_to_cascade_coupling(self):
        for name in ("photon_pair", "swap"):
            _, setup, _, _ = validate_config({"scenario": name})
            assert setup.dimensionless_coupling == pytest.approx(
                math.pi / math.sqrt(2))

    def test_out_of_range_loss_rejected(self):
        with pytest.raises(ConfigError):
            validate_config({"scenario": "single_photon",
                             "setup": {"loss_probability": 1.5}})

    def test_unknown_scenario_rejected(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            validate_config({"scenario": "frobnicate"})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown setup key"):
            validate_config({"scenario": "single_photon",
                             "setup": {"banana_m": 1.0}})
        with pytest.raises(ConfigError, match="unknown numerics key"):
            validate_config({"scenario": "single_photon",
                             "numerics": {"banana": 1}})

    def test_missing_scenario_rejected(self):
        with pytest.raises(ConfigError, match="must name a scenario"):
            validate_config({})

    def test_conflicting_grating_period_rejected(self):
        with pytest.raises(ConfigError, match="conflict"):
            validate_config({"scenario": "single_photon",
                             "setup": {"grating_period_m": 1.5e-8}})


class TestWriters:
    def test_csv_format(self, tmp_path):
        result = ScenarioResult(
            name="demo",
            columns={"x": np.array([0.0, 0.5]),
                     "y": np.array([1.0, 1.0 / 3.0])},
            manifest={},
        )
        path = tmp_path / "demo.csv"
        write_csv(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,y"
        assert lines[2].split(",")[1] == "3.33333333333333e-01"

    def test_manifest_round_trip(self, tmp_path):
        result = ScenarioResult(
            name="demo", columns={},
            manifest={"alpha": 1.5, "nested": {"b": np.float64(2.0)},
                      "flag": True})
        path = tmp_path / "demo.json"
        write_manifest(result, path)
        payload = json.loads(path.read_text())
        assert payload["scenario"] == "demo"
        assert payload["alpha"] == 1.5
        assert payload["nested"]["b"] == 2.0
        assert payload["flag"] is True


class TestRunScenario:
    def test_end_to_end_single_photon(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(FULL)
        paths = run_scenario(config, tmp_path / "out")
        assert [p.name for p in paths] == ["single_photon.csv",
                                           "single_photon_manifest.json"]
        lines = paths[0].read_text().splitlines()
        assert lines[0] == "g_Q,P_E1_0,P_E0_1,P_other,fidelity"
        assert len(lines) == 6
        manifest = json.loads(paths[1].read_text())
        assert manifest["scenario"] == "single_photon"
        assert manifest["max_norm_drift"] <= 1e-9
        assert "grating_period_m" in manifest
        assert "rhs_evaluations" in manifest

    def test_deterministic_output(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(FULL)
        first = run_scenario(config, tmp_path / "a")[0].read_bytes()
        second = run_scenario(config, tmp_path / "b")[0].read_bytes()
        assert first == second

    def test_symmetric_n_scenario(self, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(
            'scenario = "symmetric_n"\n\n[sweep]\npoints = 5\n'
            'electron_counts = [1, 4]\n')
        paths = run_scenario(config, tmp_path / "out")
        lines = paths[0].read_text().splitlines()
        assert lines[0].startswith("N,g_Q,")
        assert len(lines) == 11  # two counts x five points + header

    def test_missing_config_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            run_scenario(tmp_path / "nope.toml", tmp_path)

    def test_malformed_config_errors(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("scenario = [unterminated\n")
        with pytest.raises(ConfigError, match="malformed"):
            load_config(config)


class TestMainEntry:
    def test_report_command(self, tmp_path, capsys):
        config = tmp_path / "cfg.toml"
        config.write_text(MINIMAL)
        code = main(["report", str(config), "--out-dir",
                     str(tmp_path / "out")])
        assert code == 0
        manifest = json.loads(
            (tmp_path / "out" / "phase_match_report_manifest.json")
            .read_text())
        assert manifest["delta_min_times_transit"] == pytest.approx(66.3,
                                                                    abs=0.1)

    def test_run_command_error_paths(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "missing.toml")])
        assert code == 2
        assert "error:" in capsys.readouterr().err
