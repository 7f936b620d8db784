import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eppsdecomp.correlator import ReturnSeries  # noqa: E402

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""

    def _record(criterion, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def random_return_days(rng, n_days, max_len, dt=1, step=None, max_offset=5):
    """Per-day ReturnSeries with random lengths and start offsets."""
    step = step or dt
    days = []
    for d in range(n_days):
        n = int(rng.integers(2, max_len + 1))
        t0 = int(rng.integers(0, max_offset + 1)) * step
        days.append(ReturnSeries(dt, t0, rng.normal(size=n), step, f"2001-01-{d + 1:02d}"))
    return days


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
