"""Shared pytest hooks.

Tests marked with `criterion(cid, title)` are release gates; after the run
the terminal summary prints one PASS/FAIL line for each so the gate status
is readable without scrolling through the full log.
"""
import pytest


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(cid, title): a release criterion reported in the summary")
    config._criterion_outcomes = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid, title = marker.args
    table = item.config._criterion_outcomes
    if report.skipped:
        table[cid] = (title, "SKIP")
    elif report.failed:
        table[cid] = (title, "FAIL")
    elif report.when == "call" and cid not in table:
        table[cid] = (title, "PASS")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = getattr(config, "_criterion_outcomes", {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    width = max(len(title) for title, _ in table.values())
    for cid in sorted(table, key=lambda c: (len(c), c)):
        title, status = table[cid]
        terminalreporter.write_line(f"{cid:>3}  {title:<{width}}  {status}")
