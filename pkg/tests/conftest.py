import numpy as np
import pytest

from shiftres.dynamics import TaskDefinition, TimeSeries, integrate, lorenz
from shiftres.reservoir import ReservoirConfig, drive

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def small_task():
    """Lorenz x -> y with short phases so a 20-node reservoir runs in well under a second."""
    return TaskDefinition("lorenz", lorenz(), 0, 1, 20.0, 30.0, 35.0, 0.3)


@pytest.fixture(scope="session")
def lorenz_signals():
    traj = integrate(lorenz(), [1.0, 1.0, 1.0], 0.01, 40.0)
    return traj.component(0), traj.component(1)


@pytest.fixture(scope="session")
def small_traj(lorenz_signals):
    s, _ = lorenz_signals
    config = ReservoirConfig.create(N=20, epsilon=0.5, gamma=1.0, dt=0.01, seed=3)
    return drive(config, s, 15.0, 39.0)


@pytest.fixture(scope="session")
def sine_input():
    t = np.arange(0, 30.0 + 1e-9, 0.01)
    return TimeSeries(0.0, 0.01, np.sin(t) + 0.5 * np.sin(0.37 * t))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
