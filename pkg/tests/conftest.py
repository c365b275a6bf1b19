import numpy as np
import pytest

from spdecontrol import SeedPolicy, build_scenario

REDUCED = {
    "wave_steering": {"n_cells": 64, "n_steps": 100},
    "unstable_state": {"n_cells": 64, "n_steps": 100},
    "sde_toy": {"n_steps": 100},
}


def reduced_scenario(name, **extra):
    overrides = dict(REDUCED[name])
    overrides.update(extra)
    return build_scenario(name, overrides)


@pytest.fixture
def policy():
    return SeedPolicy(20260824)


@pytest.fixture
def rng():
    return np.random.default_rng(99)
