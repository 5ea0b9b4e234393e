"""Config parsing/validation, effective-config provenance, CLI surfaces."""

import filecmp
import json
from pathlib import Path

import pytest

from rfneuron.cli import main
from rfneuron.config import dump_effective_config, load_config
from rfneuron.errors import ConfigError

FAST_CONFIG = """
integrator:
  dt: 2.0e-06
  t_end: 0.06
  sample_stride: 25
ringdown:
  horizon: 0.06
  settle_window: 0.012
  integrator:
    dt: 2.0e-06
    t_end: 0.06
    sample_stride: 25
fi:
  n_levels: 4
  level_min: 0.38
  level_max: 0.47
  spikes_per_point: 10
  timeout: 0.1
chirp:
  n_freqs: 3
  spikes_per_freq: 4
  f_start: 180.0
  f_end: 260.0
  n_bias: 2
  bias_max: 1.3e-10
sweep:
  n_points: 4
  I_min: 5.0e-11
  I_max: 4.0e-10
montecarlo:
  n_dies: 3
  model:
    seed: 123
"""


@pytest.fixture()
def fast_config(tmp_path) -> Path:
    path = tmp_path / "fast.yaml"
    path.write_text(FAST_CONFIG)
    return path


class TestLoadConfig:
    def test_defaults_without_file(self):
        cfg = load_config()
        assert cfg.neuron.V_th == 0.850
        assert cfg.integrator.dt == 1e-6
        assert cfg.handshake.T_spk == cfg.neuron.T_spk

    def test_sections_override_defaults(self, fast_config):
        cfg = load_config(fast_config)
        assert cfg.integrator.t_end == 0.06
        assert cfg.fi.n_levels == 4
        assert cfg.montecarlo.n_dies == 3
        assert cfg.montecarlo.model.seed == 123

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("resonator:\n  dt: 1.0e-6\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("neuron:\n  C3: 1.0e-12\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_invariant_violation_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("neuron:\n  V_reset: 0.9\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_dotted_overrides(self):
        cfg = load_config(None, overrides={"montecarlo.model.seed": 5,
                                           "integrator.dt": 5e-7})
        assert cfg.montecarlo.model.seed == 5
        assert cfg.integrator.dt == 5e-7

    def test_effective_dump_round_trips(self, tmp_path):
        cfg = load_config()
        path = tmp_path / "eff.yaml"
        dump_effective_config(cfg, path)
        again = load_config(path)
        assert again == cfg


class TestCli:
    def test_ringdown_writes_outputs(self, fast_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["ringdown", "--config", str(fast_config), "--outdir", str(out)])
        assert rc == 0
        for name in ("ringdown_trace.csv", "ringdown_phase.csv",
                     "ringdown_metrics.json", "ringdown_events.csv",
                     "ringdown_events.json", "effective_config.yaml"):
            assert (out / name).exists()
        metrics = json.loads((out / "ringdown_metrics.json").read_text())
        assert abs(metrics["baseline_U"] - 0.7236) < 5e-3

    def test_fi_row_count_matches_levels(self, fast_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["fi", "--config", str(fast_config), "--outdir", str(out)])
        assert rc == 0
        lines = (out / "fi_curve.csv").read_text().strip().splitlines()
        assert lines[0] == "level_V,rate_Hz,rate_std_Hz"
        assert len(lines) == 1 + 4

    def test_chirp_raster_and_map(self, fast_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["chirp", "--config", str(fast_config), "--outdir", str(out),
                   "--full-map"])
        assert rc == 0
        assert (out / "chirp_raster.csv").exists()
        assert (out / "tuning_map.csv").exists()
        payload = json.loads((out / "tuning_map.json").read_text())
        assert len(payload["bias_levels_A"]) == 2
        assert len(payload["frequencies_Hz"]) == 3

    def test_sweep_bias_fit_report(self, fast_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["sweep-bias", "--config", str(fast_config), "--outdir", str(out)])
        assert rc == 0
        fit = json.loads((out / "sweep_fit.json").read_text())
        assert fit["r_squared"] > 0.99
        lines = (out / "sweep_bias.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 4

    def test_montecarlo_outputs(self, fast_config, tmp_path):
        out = tmp_path / "out"
        rc = main(["montecarlo", "--config", str(fast_config), "--outdir", str(out)])
        assert rc == 0
        pop = json.loads((out / "population.json").read_text())
        assert pop["n_dies"] == 3

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("neuron:\n  V_reset: 0.9\n")
        rc = main(["ringdown", "--config", str(bad), "--outdir", str(tmp_path / "o")])
        assert rc == 1

    def test_seed_override_changes_population(self, fast_config, tmp_path):
        out1, out2, out3 = (tmp_path / n for n in ("a", "b", "c"))
        main(["montecarlo", "--config", str(fast_config), "--outdir", str(out1)])
        main(["montecarlo", "--config", str(fast_config), "--outdir", str(out2),
              "--seed", "999"])
        main(["montecarlo", "--config", str(fast_config), "--outdir", str(out3)])
        assert not filecmp.cmp(out1 / "dies.csv", out2 / "dies.csv", shallow=False)
        assert filecmp.cmp(out1 / "dies.csv", out3 / "dies.csv", shallow=False)

    def test_repeated_runs_byte_identical(self, fast_config, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        main(["ringdown", "--config", str(fast_config), "--outdir", str(out1)])
        main(["ringdown", "--config", str(fast_config), "--outdir", str(out2)])
        for name in ("ringdown_trace.csv", "ringdown_metrics.json",
                     "effective_config.yaml"):
            assert filecmp.cmp(out1 / name, out2 / name, shallow=False)
