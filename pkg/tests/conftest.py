import numpy as np
import pytest

from menuprobe.core import AgentType, GameInstance, StrategySpace

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, label = marker.args
    key = (number, label)
    if report.failed or report.when == "call":
        status = "FAIL" if report.failed else ("PASS" if report.passed else "SKIP")
        if _CRITERIA.get(key) != "FAIL":
            _CRITERIA[key] = status


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, label), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {number}: {status}  {label}")


def line_space():
    """The unit interval as a one-dimensional strategy space."""
    return StrategySpace.box(1)


def line_type(slopes, intercepts, type_id=0):
    return AgentType(np.asarray(slopes, dtype=float)[:, None], intercepts, type_id)


def line_game(types):
    return GameInstance(line_space(), tuple(types))
