import math
import re

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from magsym import MathieuProblem, reference_solution

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def harmonic_propagator(omega: float, t: float) -> np.ndarray:
    """Closed-form fundamental matrix of x'' + omega^2 x = 0 (omega > 0)."""
    c, s = math.cos(omega * t), math.sin(omega * t)
    return np.array([[c, s / omega], [-omega * s, c]])


@pytest.fixture(scope="session")
def mathieu_11():
    return MathieuProblem(1.0, 1.0)


@pytest.fixture(scope="session")
def mathieu_11_ref(mathieu_11):
    return reference_solution(mathieu_11, 0.0, math.pi)



def _criterion_key(line):
    number = re.match(r"criterion (\d+)(\w?)", line)
    return int(number.group(1)), number.group(2)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            lines.extend(value for name, value in rep.user_properties if name == "acceptance")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=_criterion_key):
            terminalreporter.write_line(line)
