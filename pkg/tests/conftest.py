import numpy as np
import pytest

import acceptance_log
from bdris.emdata import generate_synthetic
from bdris.pattern import AngleGrid

F0 = 2.4e9
SPACING = 0.0625


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines():
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ds44():
    """Behavioral 4x4 at half-wavelength spacing on the 1 x 5 deg grid."""
    return generate_synthetic(4, 4, SPACING, F0)


@pytest.fixture(scope="session")
def ds44_coupled():
    return generate_synthetic(4, 4, SPACING, F0, grid=AngleGrid.full(1.0, 2.0), coupling=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
