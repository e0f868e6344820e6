"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, title): acceptance criterion id and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args


def pytest_runtest_logreport(report):
    key = getattr(report, "criterion", None)
    if key is None:
        return
    if report.when == "call" or report.failed:
        _results[key] = (report.passed and _results.get(key, (True,))[0], report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (cid, title), (ok, secs) in sorted(_results.items(), key=lambda kv: int(kv[0][0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {cid:<5} {title} ({secs:.2f} s)")
