import pytest

from pedflow.spatial import RateParams, generate_crossbar

ACCEPTANCE: list[str] = []


def record_criterion(label: str, passed: bool, detail: str = "") -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] {label}" + (f": {detail}" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def g11():
    return generate_crossbar(1, 1)


@pytest.fixture(scope="session")
def g22():
    return generate_crossbar(2, 2)


@pytest.fixture
def quiet_params():
    """No arrivals: only preloaded pedestrians move."""
    return RateParams(arr_A=0.0, arr_B=0.0)
