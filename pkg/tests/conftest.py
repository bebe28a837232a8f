import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

from helpers import spec  # noqa: E402

COUNTEREXAMPLE = [[0.5, 0, 0.5], [0, 0.5, 0.5], [0, 0, 1]]
ZERO_CHAIN = [[0, 1, 0], [0, 0, 1], [0, 0, 1]]
REPEATED_HALF = [[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]]
NONLEADING = [[0.6, 0.2, 0.2], [0, 0.3, 0.7], [0, 0, 1]]
SPECS_DIR = Path(__file__).parent.parent / "specs"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def counterexample():
    return spec(COUNTEREXAMPLE)


@pytest.fixture
def zero_chain():
    return spec(ZERO_CHAIN)


@pytest.fixture
def repeated_half():
    return spec(REPEATED_HALF)


@pytest.fixture
def nonleading():
    return spec(NONLEADING)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[name])
