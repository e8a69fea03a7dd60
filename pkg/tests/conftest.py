import pytest

from cocyclebench.groups import BS12, FreeAbelian, Heisenberg, Lamplighter2


@pytest.fixture
def Z():
    return FreeAbelian(1)


@pytest.fixture
def Z2():
    return FreeAbelian(2)


@pytest.fixture
def heis():
    return Heisenberg()


def all_groups():
    return [FreeAbelian(1), FreeAbelian(2), Heisenberg(), Lamplighter2(), BS12()]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
