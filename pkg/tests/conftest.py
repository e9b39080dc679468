import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_results: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): end-to-end acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    label = mark.args[0]
    if rep.failed:
        _results[label] = "FAIL"
    elif rep.when == "call" and rep.passed:
        _results.setdefault(label, "PASS")
    elif rep.skipped:
        _results.setdefault(label, "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in sorted(_results.items()):
        terminalreporter.write_line(f"{status:4s}  {label}")
