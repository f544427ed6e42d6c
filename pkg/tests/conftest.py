"""Collects the acceptance-criterion verdicts and prints them after the run."""
import pytest

VERDICTS = {}


@pytest.fixture
def verdict():
    """Call ``verdict(k, ok, detail)`` once per criterion."""
    def record(k, ok, detail):
        VERDICTS[k] = (bool(ok), detail)
        print(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(VERDICTS):
        ok, detail = VERDICTS[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
