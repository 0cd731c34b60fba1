import os

import numpy as np
import pytest

from riemctrl.models import BUILTIN_MODELS, builtin_model

SEED = int(os.environ.get("RIEMCTRL_SEED", "20240917"))
MODEL_NAMES = sorted(BUILTIN_MODELS)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(params=MODEL_NAMES)
def model(request):
    return builtin_model(request.param)


@pytest.fixture(params=MODEL_NAMES)
def fd_model(request):
    """Same models with every derivative taken by finite differences."""
    return builtin_model(request.param).fd_only()


def random_state(model, rng, speed=1.0):
    q = model.chart.sample(rng)
    return q, speed * rng.normal(size=model.dim)
