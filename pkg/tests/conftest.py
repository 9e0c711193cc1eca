import numpy as np
import pytest

from ldlimit.bath import BathSpec
from ldlimit.interaction import SystemSpec, q1_instance, random_instance


@pytest.fixture
def q1():
    return q1_instance()


@pytest.fixture(params=[1, 2], ids=["seed1", "seed2"])
def rand22(request):
    return random_instance(2, 2, request.param)


def decoupled(d=2, n=1, gamma=None, beta=1.0, H=None):
    """Instance with D = 0."""
    H = np.diag(np.linspace(-1, 1, d)).astype(complex) if H is None else H
    gamma = tuple(range(n + 1)) if gamma is None else gamma
    return SystemSpec(d, H, np.zeros((n, n, d, d))), BathSpec(n, gamma, beta)


ACCEPTANCE = []


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
