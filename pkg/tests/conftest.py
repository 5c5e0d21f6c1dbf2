import pytest

CRITERIA = {}


@pytest.fixture
def criterion():
    """Record a named acceptance criterion's outcome for the terminal summary."""

    def record(key, ok, detail=""):
        CRITERIA[key] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: int(k.split()[0][1:])):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {detail}")
