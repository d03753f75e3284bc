import sys
from pathlib import Path

import pytest

from coincidence.hypotheses import build_number_space, load_city_space

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def numbers():
    return build_number_space()


@pytest.fixture(scope="session")
def cities():
    return load_city_space()


@pytest.fixture(scope="session")
def cities30():
    return load_city_space(FIXTURES / "cities30.csv")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
