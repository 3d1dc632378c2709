import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    if report.when == "call" or report.failed:
        prev = _criteria.get(marker, (True, ""))
        _criteria[marker] = (prev[0] and report.passed, report.nodeid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result()._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (num, text), (ok, _) in sorted(_criteria.items()):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def oracle_fixtures():
    with open(FIXTURES / "oracle_fixtures.json") as fh:
        return json.load(fh)
