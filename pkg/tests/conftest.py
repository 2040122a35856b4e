import pytest

from onecircuit.precision import current_mode, set_precision


@pytest.fixture(autouse=True)
def high_precision():
    previous = current_mode()
    set_precision("high")
    yield
    set_precision(previous)


ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def acceptance():
    """record(number, passed, detail): one summary line per acceptance criterion."""

    def record(number, passed, detail):
        line = f"AC{number:<2} {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
