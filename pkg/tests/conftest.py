import pytest

_ACCEPTANCE = {}


@pytest.fixture
def report():
    """Record one acceptance verdict; printed in the terminal summary."""
    def _report(number, title, verdict, detail=""):
        if isinstance(verdict, bool):
            verdict = "PASS" if verdict else "FAIL"
        _ACCEPTANCE[number] = (title, verdict, detail)
    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number} [{verdict}] {title}: {detail}")
