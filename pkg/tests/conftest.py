import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for the end-of-run summary."""
    def record(label: str, ok: bool, detail: str = "") -> bool:
        _VERDICTS.append((label, bool(ok), detail))
        print(f"{label}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_VERDICTS, key=lambda v: v[0]):
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}  {detail}")
