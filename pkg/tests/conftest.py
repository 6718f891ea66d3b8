import sys

import numpy as np
import pytest

from qfp import ModelParams

CONFINED = ModelParams(1.0, 1.0, 1.0, 1.0, 0.0)
UNDERDAMPED = ModelParams(0.3, 1.5, 1.0, 0.5, 0.1)
OVERDAMPED = ModelParams(2.5, 1.0, 2.0, 1.0, 0.2)
OSCILLATOR = ModelParams(0.0, 1.0, 1.0, 1.0, 0.0)
FRICTION = ModelParams(1.0, 0.0, 1.0, 0.25, 0.0)
FREE = ModelParams(0.0, 0.0, 1.0, 1.0, 0.0)

REGIMES = {"underdamped": UNDERDAMPED, "critical": CONFINED, "overdamped": OVERDAMPED}
UNCONFINED = {"oscillator": OSCILLATOR, "friction": FRICTION, "free": FREE}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LEDGER:
        LEDGER = mod.LEDGER
        terminalreporter.section("acceptance criteria")
        for line in sorted(LEDGER.values()):
            terminalreporter.write_line(line)
