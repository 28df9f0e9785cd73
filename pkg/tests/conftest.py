import pytest

_REPORT = []


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, title, checks)``.

    ``checks`` is a list of ``(label, passed, detail)``; the line passes only
    if every check passes. Returns the overall verdict.
    """

    def _record(number, title, checks):
        ok = all(c[1] for c in checks)
        parts = [f"{label}={'ok' if good else 'FAIL'} ({detail})" for label, good, detail in checks]
        _REPORT.append((number, f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}: " + "; ".join(parts)))
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_REPORT):
        terminalreporter.write_line(line)
