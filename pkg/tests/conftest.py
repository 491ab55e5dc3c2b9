"""Collects the outcome of every acceptance criterion and prints one line each."""

import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def detail(request):
    """Mutable list a criterion test appends human-readable measurements to."""
    notes = []
    request.node.criterion_notes = notes
    return notes


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    n = marker.args[0]
    notes = "; ".join(getattr(item, "criterion_notes", []))
    ok = report.passed and _RESULTS.get(n, (True,))[0]
    _RESULTS[n] = (ok, notes if ok else (notes + " | " if notes else "") + _short(report))


def _short(report):
    if report.passed:
        return ""
    text = str(report.longrepr).strip().splitlines()
    return text[-1] if text else "failed"


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, notes = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {notes}")
