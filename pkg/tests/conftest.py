"""Shared pytest plumbing.

Acceptance tests mark themselves with @pytest.mark.criterion("...") and the
terminal summary prints one PASS/FAIL line per criterion so a run's verdict
can be read off without scrolling through the full log.
"""

import pytest

_results = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(label): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    label = marker.args[0]
    detail = getattr(item, "_criterion_detail", "")
    _results.append((label, report.outcome, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, outcome, detail in _results:
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"[{verdict}] {label}"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line)


@pytest.fixture
def criterion_detail(request):
    """Lets an acceptance test attach measured numbers to its summary line."""
    def set_detail(text):
        request.node._criterion_detail = text
    return set_detail
