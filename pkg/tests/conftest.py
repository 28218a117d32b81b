import re
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CRITERIA = {
    1: "forced-token oracle",
    2: "monotonicity of forced tokens",
    3: "DTP tree dynamics",
    4: "DTP solution retention",
    5: "closed forms vs generic updates",
    6: "valid configurations under F",
    7: "equivalence suite",
    8: "state-decoupling dichotomy",
    9: "PTP determinism on a single-solution tree",
    10: "solver soundness and liveness",
}

_outcomes = {}
_NAME = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m or "test_acceptance" not in report.nodeid:
        return
    k = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed"
        _outcomes[k] = _outcomes.get(k, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k in _outcomes:
            terminalreporter.write_line(f"criterion {k:2d} {CRITERIA[k]}: {'PASS' if _outcomes[k] else 'FAIL'}")
        else:
            terminalreporter.write_line(f"criterion {k:2d} {CRITERIA[k]}: NOT RUN")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


@pytest.fixture
def timer():
    return Timer
