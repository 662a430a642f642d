import pytest

from ditsmark.model import MockSourceConfig
from ditsmark.randomness import keygen
from ditsmark.singlebit import SchemeConfig

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def sk():
    return keygen(16, b"ditsmark-test-key-entropy-000000")


@pytest.fixture(scope="session")
def cfg():
    return SchemeConfig(lambda_=16)


@pytest.fixture(scope="session")
def band():
    return MockSourceConfig(kind="band", band_low=0.35, band_high=0.65, max_steps=1 << 20)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
