import numpy as np
import pytest

from walldetect import FlightLog, WallLabel
from walldetect.core import COLUMNS
from walldetect.simulate import SimConfig, simulate_flight

# filled by test_acceptance; printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def short_cfg():
    """Small flights so corpus-level tests stay quick."""
    return SimConfig(duration_s=4.0, nowall_duration_s=4.0, distance_profile=((0.0, 0.1),))


def make_log(n, label=WallLabel.LEFT, flight_id="f", seed=0, rate=100.0):
    r = np.random.default_rng(seed)
    data = r.normal(0, 1, (n, len(COLUMNS)))
    data[:, 0] = np.arange(n) / rate
    data[:, 7:9] = r.uniform(-20, 20, (n, 2))
    return FlightLog(data, label, flight_id, rate)


@pytest.fixture
def flight():
    return simulate_flight(WallLabel.LEFT, SimConfig(duration_s=3.0), "left-00")
