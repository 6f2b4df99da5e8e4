import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

ACCEPTANCE = {}


def record_acceptance(number, title, passed, detail):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"[criterion {number:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) every jitted kernel before any timing."""
    from rcsflock import Euclidean, ModelParams, StepperConfig, Sphere, SystemState, simulate

    R = np.array([[0.0, 1.0], [1.0, 0.0]])
    for c in (5.0, np.inf):
        p = ModelParams(c, 1.0, 1.0, 1.0, R)
        simulate(SystemState([[0.0, 0.0], [1.0, 0.0]], [[0.1, 0.0], [0.0, 0.1]]), p, StepperConfig(dt=0.1, t_end=0.2))
        b = Sphere(2)
        x = np.array([[0.0, 0.0, 1.0], [np.sin(0.5), 0.0, np.cos(0.5)]])
        simulate(SystemState(x, [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0]]), p, StepperConfig(dt=0.1, t_end=0.2), b)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        tr.write_line(f"{n:2d}. {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
