import pytest
from hypothesis import settings

from harmonic_rejection.scenario import load_scenario
from harmonic_rejection.simcore import run_closed_loop, run_open_loop_estimation

settings.register_profile("default", deadline=None)
settings.load_profile("default")

_CACHE = {}


def run_bundled(name):
    """Run a bundled scenario once per session."""
    if name not in _CACHE:
        scn = load_scenario(name)
        if scn.mode == "open_loop":
            _CACHE[name] = run_open_loop_estimation(scn.disturbance, scn.estimator, scn.sim)
        else:
            _CACHE[name] = run_closed_loop(scn)
    return _CACHE[name]


@pytest.fixture
def bundled_trace():
    return run_bundled


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
