import warnings

import pytest

from crosskerr.presets import FLUX5_SYSTEM, ZERO_FLUX_CIRCUIT, ZERO_FLUX_SYSTEM


@pytest.fixture
def circuit():
    return ZERO_FLUX_CIRCUIT


@pytest.fixture
def system():
    return ZERO_FLUX_SYSTEM


@pytest.fixture
def system5():
    return FLUX5_SYSTEM


@pytest.fixture(autouse=True)
def _quiet_far_detuning():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="ancilla and cavity far detuned")
        yield


def pytest_terminal_summary(terminalreporter):
    import sys
    lines = {}
    for mod in list(sys.modules.values()):
        lines.update(getattr(mod, "ACCEPTANCE_RESULTS", {}) or {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
