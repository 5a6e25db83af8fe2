import dataclasses

import numpy as np
import pytest

from btcabm.calibration import CalibrationSet
from btcabm.orderbook import BACKENDS

BACKEND_NAMES = sorted(BACKENDS)


@pytest.fixture(params=BACKEND_NAMES)
def backend(request):
    return request.param


@pytest.fixture
def calib():
    return CalibrationSet()


@pytest.fixture
def short_calib():
    return dataclasses.replace(CalibrationSet(), horizon=120)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines collected by test_acceptance, echoed at the end of the run
VERDICT_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)
