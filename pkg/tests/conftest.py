import numpy as np
import pytest

from dtnlab import BoundaryFunction

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, text = marker.args
    ok = rep.passed and rep.when == "call"
    prev = _RESULTS.get(number, (True, text))
    _RESULTS[number] = (prev[0] and ok, text)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, text = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}")


def random_smooth(grid, rng, decay=0.5):
    """Random boundary function with coefficients damped like ``exp(-decay * degree)``."""
    return BoundaryFunction(grid, rng.standard_normal(grid.dim) * np.exp(-decay * grid.basis.degrees))


def random_bandlimited(grid, rng, max_degree):
    c = rng.standard_normal(grid.dim) * (grid.basis.degrees <= max_degree)
    return BoundaryFunction(grid, c)
