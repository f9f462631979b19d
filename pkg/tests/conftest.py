"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""
from collections import defaultdict

import pytest

_RESULTS = defaultdict(list)  # number -> [(title, passed, details)]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        details = ", ".join(f"{k}={v}" for k, v in item.user_properties)
        _RESULTS[number].append((title, report.outcome == "passed", details))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entries = _RESULTS[number]
        ok = all(passed for _, passed, _ in entries)
        title = entries[0][0]
        details = "; ".join(d for _, _, d in entries if d)
        terminalreporter.write_line(f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}"
                                    + (f" [{details}]" if details else ""))
