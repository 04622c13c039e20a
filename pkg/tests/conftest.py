import numpy as np
import pytest

from madtwinnet.config import RunConfig

# small enough that a full train/separate round trip takes a few seconds
TINY = RunConfig(frame_length=255, fft_length=256, hop=64, F=24, T=12, L=2, epochs=1,
                 batch_size=8, griffin_lim_iterations=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_config():
    return TINY


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
