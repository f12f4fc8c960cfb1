import numpy as np
import pytest

from reserve_insure.market import MarketPrices
from reserve_insure.renewable import RenewableModel
from reserve_insure.storage import StorageParams


@pytest.fixture
def worked_prices():
    """Three-slot day with an obvious cheap/expensive pair."""
    return MarketPrices(np.array([10.0, 40.0, 20.0]), 100.0)


@pytest.fixture
def worked_model():
    return RenewableModel(np.full(3, 10.0), np.full(3, 2.0), 30.0)


@pytest.fixture
def worked_params():
    return StorageParams(e_max=12.0, cost_coeff=7.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20180601)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def log(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
