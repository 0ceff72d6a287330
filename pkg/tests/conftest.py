"""Suite-wide plumbing: slow-test gating and the acceptance scoreboard."""

import os

import pytest

_acceptance_results = {}


def pytest_collection_modifyitems(config, items):
    # Long-running reproductions only run when asked for explicitly.
    if config.getoption("-m"):
        return
    if os.environ.get("NBMIMO_RUN_SLOW"):
        return
    skip = pytest.mark.skip(
        reason="long-running reproduction; enable with -m slow or NBMIMO_RUN_SLOW=1"
    )
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance_results):
        outcome = _acceptance_results[name].upper()
        mark = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"{mark:8s} {name}")
