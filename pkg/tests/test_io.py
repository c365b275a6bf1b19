import numpy as np
import pytest

from spdecontrol.config import load_config, parse_config
from spdecontrol.grids import PointGrid, SpatialGrid
from spdecontrol.io import (
    read_field_csv,
    read_history_jsonl,
    write_field_csv,
    write_history_jsonl,
    write_json,
)
from spdecontrol.scenarios import ConfigError


class TestFieldCsv:
    def test_round_trip_is_lossless(self, tmp_path, rng):
        grid = SpatialGrid(0.0, 20.0, 17)
        fields = rng.standard_normal((9, 17)) * np.exp(rng.standard_normal((9, 17)) * 5)
        times = 0.125 * np.arange(9)
        f = tmp_path / "field.csv"
        write_field_csv(f, times, fields, grid, 0.125, 8)
        meta, t2, f2 = read_field_csv(f)
        assert np.array_equal(times, t2)
        assert np.array_equal(fields, f2)
        assert meta == dict(x_min=0.0, x_max=20.0, n_cells=17, dt=0.125, n_steps=8)

    def test_point_grid_header(self, tmp_path):
        f = tmp_path / "scalar.csv"
        write_field_csv(f, np.array([0.0, 0.5]), np.zeros((2, 1)), PointGrid(), 0.5, 1)
        meta, _, fields = read_field_csv(f)
        assert meta["n_cells"] == 1
        assert fields.shape == (2, 1)

    def test_missing_header_rejected(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("0.0,1.0\n")
        with pytest.raises(ValueError):
            read_field_csv(f)


class TestHistoryJsonl:
    def test_round_trip(self, tmp_path):
        history = [
            dict(iteration=0, cost=1.5, std_error=0.1, grad_norm=2.0, beta=0.0,
                 step=1.0, accepted=True, forced=False),
            dict(iteration=1, cost=None, std_error=0.0, grad_norm=1e-4, beta=0.5,
                 step=0.0, accepted=False, forced=False),
        ]
        f = tmp_path / "history.jsonl"
        write_history_jsonl(f, history)
        assert read_history_jsonl(f) == history

    def test_extra_keys_are_dropped(self, tmp_path):
        f = tmp_path / "history.jsonl"
        write_history_jsonl(f, [dict(iteration=0, cost=1.0, std_error=0.0,
                                     grad_norm=1.0, beta=0.0, step=1.0,
                                     accepted=True, forced=False, debug="x")])
        assert "debug" not in read_history_jsonl(f)[0]


class TestConfig:
    def test_minimal_config(self):
        cfg = parse_config({"scenario": "sde_toy"})
        assert cfg.seed == 0
        scenario, policy = cfg.build()
        assert scenario.name == "sde_toy"
        assert policy.run_seed == 0

    def test_sections_map_onto_overrides(self):
        cfg = parse_config({
            "scenario": "wave_steering",
            "grid": {"n_cells": 65, "n_steps": 100},
            "noise": {"sigma": 0.25, "s": 2.0, "n_modes": 8},
            "cost": {"lambda": 0.5},
            "cg": {"eta": 0.1, "max_iters": 7},
            "seed": 42,
        })
        assert cfg.overrides["n_cells"] == 65
        assert cfg.overrides["decay_exponent"] == 2.0
        assert cfg.overrides["lam"] == 0.5
        scenario, policy = cfg.build()
        assert scenario.spec.grid.n_cells == 65
        assert scenario.spec.sigma == 0.25
        assert scenario.cost.lam == 0.5
        assert scenario.cg.eta == 0.1 and scenario.cg.max_iters == 7
        assert policy.run_seed == 42

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "sde_toy", "scenari0": 1})

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "sde_toy", "cg": {"step_size": 1.0}})

    def test_missing_scenario_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"seed": 1})

    def test_invalid_values_fail_eagerly(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "sde_toy", "cost": {"c_running": 1.0}})

    def test_non_integer_seed_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"scenario": "sde_toy", "seed": "abc"})

    def test_load_config_file(self, tmp_path):
        f = tmp_path / "run.json"
        write_json(f, {"scenario": "unstable_state", "seed": 5})
        cfg = load_config(f)
        assert cfg.scenario == "unstable_state"
        assert cfg.echo() == {"scenario": "unstable_state", "seed": 5}

    def test_missing_file_is_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.json")

    def test_malformed_json_is_config_error(self, tmp_path):
        f = tmp_path / "run.json"
        f.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(f)
