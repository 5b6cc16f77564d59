"""Collects ``@pytest.mark.criterion(name)`` outcomes and prints one verdict line per criterion."""

from collections import OrderedDict

import pytest

_verdicts: "OrderedDict[str, list[tuple[str, bool]]]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion exercised by this test")


def pytest_collection_finish(session):
    # after deselection, in collection order, so the summary keeps a stable layout
    for item in session.items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _verdicts.setdefault(mark.args[0], [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    failed_here = report.failed or (report.when == "setup" and report.skipped)
    if report.when == "call" or failed_here:
        _verdicts[mark.args[0]].append((item.name, not failed_here))


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name, results in _verdicts.items():
        if not results:
            terminalreporter.write_line(f"NOT RUN  {name}")
            continue
        ok = all(passed for _, passed in results)
        failing = [t for t, passed in results if not passed]
        detail = f"  (failing: {', '.join(failing)})" if failing else ""
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}     {name}{detail}")
