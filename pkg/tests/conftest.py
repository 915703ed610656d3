import pytest

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    label, text = marker.args
    key = (label, item.name)
    if report.when == "call" or key not in _criteria:
        _criteria[key] = (text, "PASS" if report.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (label, name), (text, status) in sorted(_criteria.items()):
        terminalreporter.write_line(f"[{status}] criterion {label}: {text} ({name})")
