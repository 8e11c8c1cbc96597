import re

import pytest

_ACCEPTANCE = re.compile(r"test_acceptance\.py::test_ac(\d+)_(\w+)")
_results: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _ACCEPTANCE.search(report.nodeid)
    if not m:
        return
    key = f"AC{int(m.group(1)):02d}"
    if report.failed:
        _results[key] = ("FAIL", m.group(2))
    elif report.when == "call" and key not in _results:
        _results[key] = ("PASS", m.group(2))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_results):
        status, name = _results[key]
        terminalreporter.write_line(f"{key} {status} {name.replace('_', ' ')}")
