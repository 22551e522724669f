import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cptp_maxlik import channels, tomography  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def standard_design():
    return tomography.standard_qubit_design()


@pytest.fixture(scope="session")
def balanced_design():
    return tomography.balanced_qubit_design()


@pytest.fixture(scope="session")
def identity_choi():
    return channels.preset_channel("identity")


@pytest.fixture(scope="session")
def depolarizing_choi():
    return channels.preset_channel("depolarizing:1")


@pytest.fixture(scope="session")
def bitflip_choi():
    return channels.preset_channel("bit-flip:0.25")


@pytest.fixture(scope="session")
def amp_damp_choi():
    return channels.preset_channel("amplitude-damping:0.3")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
