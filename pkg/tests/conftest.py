import numpy as np
import pytest

# One verdict line per release criterion, filled in by test_acceptance.py and
# echoed after the run summary (bypasses per-test output capture).
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from pdkf import SensorModel, StateSpaceModel, Topology, uniform_weights
from pdkf.presets import F_PAPER, G_PAPER, H_TYPE_A, H_TYPE_B, PI0_PAPER, Q_PAPER


@pytest.fixture
def paper_model():
    return StateSpaceModel(F=F_PAPER, G=G_PAPER, Q=Q_PAPER, Pi0=PI0_PAPER)


@pytest.fixture
def stabilized_model():
    return StateSpaceModel(F=0.95 * F_PAPER, G=G_PAPER, Q=Q_PAPER, Pi0=PI0_PAPER)


@pytest.fixture
def scalar_model():
    return StateSpaceModel(F=[[0.5]], G=[[1.0]], Q=[[1.0]], Pi0=[[1.0]])


@pytest.fixture
def scalar_sensor():
    return SensorModel(H=[[1.0]], R=[[1.0]])


def make_sensor(kind="a", sigma2=0.2):
    H = H_TYPE_A if kind == "a" else H_TYPE_B
    return SensorModel(H=H, R=sigma2 * np.eye(3))


def ring_topology(N):
    A = np.eye(N, dtype=bool)
    for k in range(N):
        A[k, (k + 1) % N] = A[(k + 1) % N, k] = True
    return Topology(A)


@pytest.fixture
def two_node_setup():
    """Fully connected pair with complementary sensors and uniform weights."""
    topo = Topology(np.ones((2, 2), dtype=bool))
    sensors = (make_sensor("a", 0.2), make_sensor("b", 0.3))
    return topo, sensors, uniform_weights(topo)
