import pytest

from wigner_current.grid import make_grid

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def grid33():
    return make_grid(33, 33, 4.0, 4.0)
