import pytest

from elapsed_neurons import ConstantThreshold, ModelConfig, UnitBlock, run

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def linear_trace():
    """Constant(0.5), unit block, ds = 1e-3, t_max = 20 with snapshots."""
    config = ModelConfig(ConstantThreshold(0.5), ds=1e-3, t_max=20.0, initial=UnitBlock())
    return config, run(config, snapshot_times=[0.0, 10.0, 19.0, 19.5, 20.0])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
