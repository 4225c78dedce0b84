from __future__ import annotations

import pytest

# Criterion labels printed one per line after an acceptance run.
_ACCEPTANCE_RESULTS: dict[str, str] = {}


def record_criterion(name: str) -> None:
    _ACCEPTANCE_RESULTS.setdefault(name, "PASS")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    criterion = getattr(item.function, "_criterion", None)
    if criterion and report.when == "call":
        _ACCEPTANCE_RESULTS[criterion] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, status in _ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{status}: {name}")


def criterion(name: str):
    def decorate(function):
        function._criterion = name
        return function

    return decorate
