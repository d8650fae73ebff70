import pytest

from support import T1_REF, t1

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def inst_t1():
    return t1(1)


@pytest.fixture
def ref_t1():
    return T1_REF


@pytest.fixture
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
