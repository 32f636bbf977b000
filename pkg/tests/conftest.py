import logging

import numpy as np
import pytest

from granger_dr.core.dml import DrSitConfig
from granger_dr.core.timeseries import Panel
from granger_dr.synth.dgp import SynthConfig


def make_lagged_panel(seed=0, n_traj=5, timesteps=60, noise=0.1):
    """Y_t = X1_{t-1} + noise; X1 and X2 are independent white noise."""
    rng = np.random.default_rng(seed)
    trajectories = []
    for _ in range(n_traj):
        x = rng.standard_normal((timesteps, 2))
        y = np.empty(timesteps)
        y[0] = rng.standard_normal()
        y[1:] = x[:-1, 0] + noise * rng.standard_normal(timesteps - 1)
        trajectories.append(np.column_stack([y, x]))
    return Panel(tuple(trajectories), ("Y", "X1", "X2"), 0)


@pytest.fixture
def lagged_panel():
    return make_lagged_panel()


@pytest.fixture
def tiny_panel():
    trajectory = np.array([[0.0, 10.0], [1.0, 11.0], [2.0, 12.0]])
    return Panel((trajectory,), ("Y", "X1"), 0)


@pytest.fixture
def fast_config():
    return DrSitConfig(lag=1, k_folds=5, seed=0)


@pytest.fixture
def small_synth():
    return SynthConfig(m=3, delta=1, timesteps=40, n_traj=5, hidden_units=16, seed=3)


@pytest.fixture(autouse=True)
def drop_cli_log_handler():
    # the CLI installs a stderr handler bound to whatever stream pytest captured
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if h.get_name() == "granger_dr"]:
        root.removeHandler(handler)
