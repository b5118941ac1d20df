import warnings

import pytest

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str) -> bool:
    """Print and store one acceptance line."""
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


@pytest.fixture
def acceptance():
    return record


@pytest.fixture(autouse=True)
def _quiet_moment_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*top 1% of sites.*")
        warnings.filterwarnings("ignore", message=".*unreliable moments.*")
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
