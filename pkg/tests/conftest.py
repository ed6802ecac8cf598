import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bc1bethe import elliptic as ell  # noqa: E402
from bc1bethe.bc1_operator import Couplings, make_params  # noqa: E402

GAMMA = 0.137 + 0.061j


@pytest.fixture(scope="session")
def ctx():
    return ell.make_context(1.0, 0.3 + 1.1j)


@pytest.fixture(scope="session")
def skew_ctx():
    return ell.make_context(0.8 - 0.4j, 0.5 + 0.9j)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def a1_params(ctx):
    return make_params(ctx, Couplings((1, 0, 0, 0), (0, 0, 0, 0), GAMMA))


@pytest.fixture(scope="session")
def mixed_params(ctx):
    return make_params(ctx, Couplings((1, 0, 1, 0), (1, 1, 0, 0), GAMMA))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
