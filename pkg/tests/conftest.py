import time

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, limit): acceptance criterion with a runtime limit in seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    outcome = yield
    item._elapsed = time.perf_counter() - start


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    number, title = mark.args[0], mark.args[1]
    limit = mark.kwargs.get("limit")
    elapsed = getattr(item, "_elapsed", 0.0)
    passed = report.passed
    note = ""
    if limit is not None and elapsed > limit:
        passed = False
        note = f" (runtime {elapsed:.1f} s over the {limit} s limit)"
        report.outcome = "failed"
        report.longrepr = f"criterion {number} exceeded its runtime limit: {elapsed:.1f} s > {limit} s"
    _RESULTS[number] = (title, passed, elapsed, note)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, elapsed, note = _RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}  [{elapsed:.1f} s]{note}")
    n_pass = sum(r[1] for r in _RESULTS.values())
    terminalreporter.write_line(f"{n_pass}/{len(_RESULTS)} acceptance criteria passed")
