import time

import pytest

from handover.delay import ScenarioParams

_criteria = {}


@pytest.fixture
def scenario_a():
    return ScenarioParams(T_s=2.5e-3, f_s=35 / 3e8, F_s=2000 / 3e8, d_s=500 / 2e8, h_s=0.0, D_s=1.0)


@pytest.fixture
def scenario_b():
    return ScenarioParams(T_s=2.5e-6, f_s=35 / 3e8, F_s=2000 / 3e8, d_s=500 / 2e8, h_s=0.0, D_s=1.0)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    yield
    item.user_properties.append(("elapsed_s", time.perf_counter() - start))


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    marks = dict(report.user_properties)
    if "criterion" in marks:
        number, title = marks["criterion"]
        _criteria.setdefault(number, [title, True, 0.0])
        entry = _criteria[number]
        entry[1] = entry[1] and report.passed
        entry[2] += marks.get("elapsed_s", 0.0)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", tuple(m.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, elapsed = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f} s)")
