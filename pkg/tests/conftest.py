import pytest

from diamond.core import SolverConfig
from diamond.problems import sample_problem


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run convergence-table and long-run checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long convergence or long-run check (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def sincos():
    return sample_problem("Sincos")


@pytest.fixture
def cfg():
    return SolverConfig()
