"""Shared fixtures; collects the one-line acceptance verdicts for the run summary."""
import pytest

CRITERIA_LINES = []


@pytest.fixture
def criterion(capsys):
    """Call ``criterion(label, ok, detail)`` to record and print a verdict line."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        CRITERIA_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
