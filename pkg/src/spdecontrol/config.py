"""JSON run configuration: strict parsing (unknown keys are errors) and the
mapping onto scenario presets.

Layout:

    {
      "scenario": "wave_steering",
      "overrides": {"sigma": 0.5, ...},
      "grid":  {"n_cells": 401, "n_steps": 1500},
      "noise": {"n_modes": 32, "s": 1.0, "sigma": 0.5},
      "cost":  {"c_running": 1.0, "c_terminal": 0.0, "lambda": 0.0},
      "cg":    {"s0": 1.0, "eta": 0.05, "min_step": 1e-4, "max_iters": 100,
                "n_paths_grad": 100, "n_paths_eval": 100,
                "beta_rule": "norm_ratio"},
      "seed": 1234
    }

Only "scenario" is required; sections override the preset.  The echoed
config in every run summary is sufficient to reproduce the run bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .noise import SeedPolicy
from .scenarios import ConfigError, Scenario, build_scenario

_TOP_KEYS = {"scenario", "overrides", "grid", "noise", "cost", "cg", "seed"}
_SECTION_KEYS = {
    "grid": {"n_cells": "n_cells", "n_steps": "n_steps"},
    "noise": {"n_modes": "n_modes", "s": "decay_exponent", "sigma": "sigma"},
    "cost": {"c_running": "c_running", "c_terminal": "c_terminal", "lambda": "lam"},
    "cg": {
        "s0": "s0", "eta": "eta", "min_step": "min_step", "max_iters": "max_iters",
        "n_paths_grad": "n_paths_grad", "n_paths_eval": "n_paths_eval",
        "beta_rule": "beta_rule", "restart_every": "restart_every", "kappa": "kappa",
    },
}


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    overrides: dict
    seed: int
    raw: dict = field(repr=False)

    def build(self) -> tuple[Scenario, SeedPolicy]:
        return build_scenario(self.scenario, self.overrides), SeedPolicy(self.seed)

    def echo(self) -> dict:
        return dict(self.raw)


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    if "scenario" not in doc:
        raise ConfigError("config is missing the required 'scenario' key")

    overrides = dict(doc.get("overrides", {}))
    for section, keymap in _SECTION_KEYS.items():
        body = doc.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        bad = set(body) - set(keymap)
        if bad:
            raise ConfigError(f"unknown keys in config section {section!r}: {sorted(bad)}")
        for k, v in body.items():
            overrides[keymap[k]] = v

    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    cfg = RunConfig(scenario=doc["scenario"], overrides=overrides, seed=seed, raw=doc)
    cfg.build()  # validate eagerly so typos fail before any work is done
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(doc)
