import pytest

_LINES = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number = marker.args[0]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        detail = dict(item.user_properties).get("detail", "")
        if report.skipped:
            status = "SKIP"
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else ""
            detail = detail or reason.removeprefix("Skipped: ")
        else:
            status = "PASS" if report.passed else "FAIL"
        _LINES[number] = f"criterion {number}: {status}  {detail}  [{report.duration:.1f} s]"


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
